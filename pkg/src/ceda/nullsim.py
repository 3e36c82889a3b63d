"""Mimicry-based null distributions for contingency-table statistics.

A mimic of a table redistributes each response column's total across the
covariate rows by a multinomial draw with the observed row-margin
proportions, so it shares the table's marginal structure but is independent
of the response by construction.  Statistics over an ensemble of mimics
give the null band behind the confirmable-effect decision.

Randomness uses numpy's Philox counter-based generator; every band or job
derives its own stream from (master seed, job key), so results do not
depend on evaluation order or degree of parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ceda.tabulate import (
    CategoricalSeries,
    ContingencyTable,
    column_margin_entropy,
    conditional_entropy,
    counts_entropy,
    crosstab,
    per_column_row_entropy,
)
from ceda.categorize import apply_bins, product_categories, quantile_bins

__all__ = [
    "C1Verdict",
    "ColumnVerdict",
    "NullBand",
    "c1_test",
    "child_rng",
    "localize_differences",
    "mimic_ce_samples",
    "mimic_table",
    "noise_padded_reference",
    "noise_reference_band",
    "null_band",
]

SAMPLE_RETENTION_LIMIT = 10_000


def child_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for job ``key`` under one master seed."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class NullBand:
    """Summary of a simulated null distribution of one statistic."""

    statistic_name: str
    replicates: int
    mean: float
    sd: float
    q025: float
    q975: float
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("need at least 2 replicates")
        if self.q025 > self.q975:
            raise ValueError("q025 must not exceed q975")

    def to_json_dict(self) -> dict:
        return {
            "stat": self.statistic_name,
            "B": self.replicates,
            "mean": self.mean,
            "sd": self.sd,
            "q025": self.q025,
            "q975": self.q975,
        }


@dataclass(frozen=True)
class C1Verdict:
    """Where an observed statistic sits relative to its null band."""

    observed: float
    band: NullBand
    status: str
    excess_sd: float


def band_from_samples(name: str, samples: np.ndarray) -> NullBand:
    samples = np.asarray(samples, dtype=float)
    q025, q975 = np.quantile(samples, [0.025, 0.975])
    return NullBand(
        statistic_name=name,
        replicates=samples.size,
        mean=float(samples.mean()),
        sd=float(samples.std(ddof=1)),
        q025=float(q025),
        q975=float(q975),
        samples=samples if samples.size <= SAMPLE_RETENTION_LIMIT else None,
    )


def mimic_table(table: ContingencyTable, rng: np.random.Generator) -> ContingencyTable:
    """One mimic: per response column, a multinomial split over the rows.

    Column sums are preserved exactly; row sums only in expectation.  Rows
    that come out empty are dropped, as in any constructed table.
    """
    if table.total <= 0:
        raise ValueError("table total must be positive")
    probs = table.row_margin / table.total
    counts = np.empty_like(table.counts)
    for c in range(table.cols):
        counts[:, c] = rng.multinomial(int(table.col_margin[c]), probs)
    keep = counts.sum(axis=1) > 0
    return ContingencyTable(
        counts=counts[keep],
        row_keys=tuple(k for k, m in zip(table.row_keys, keep) if m),
        col_keys=table.col_keys,
        total=table.total,
    )


def mimic_ce_samples(
    table: ContingencyTable, n_replicates: int, rng: np.random.Generator
) -> np.ndarray:
    """Conditional entropies of ``n_replicates`` mimics, drawn vectorized.

    The per-column multinomial is realized as sequential conditional
    binomials over the rows, one vectorized draw per row across all
    replicates and columns.
    """
    counts = table.counts
    n_rows, n_cols = counts.shape
    total = float(table.total)
    probs = table.row_margin / total

    remaining = np.broadcast_to(
        table.col_margin, (n_replicates, n_cols)
    ).astype(np.int64).copy()
    cell_xlogx = np.zeros(n_replicates)
    row_xlogx = np.zeros(n_replicates)
    p_left = 1.0
    for r in range(n_rows):
        if r == n_rows - 1:
            draw = remaining
        else:
            p = probs[r] / p_left if p_left > 0 else 0.0
            draw = rng.binomial(remaining, min(max(p, 0.0), 1.0))
            remaining = remaining - draw
            p_left -= probs[r]
        pos = draw > 0
        if pos.any():
            vals = draw[pos].astype(float)
            contrib = vals * np.log(vals)
            cell_xlogx += np.bincount(
                np.nonzero(pos)[0], weights=contrib, minlength=n_replicates
            )
        rs = draw.sum(axis=1).astype(float)
        rp = rs > 0
        row_contrib = np.zeros(n_replicates)
        row_contrib[rp] = rs[rp] * np.log(rs[rp])
        row_xlogx += row_contrib
    ce = (row_xlogx - cell_xlogx) / total
    return np.maximum(ce, 0.0)


def null_band(
    table: ContingencyTable,
    statistic: str,
    n_replicates: int = 1000,
    rng: np.random.Generator | int | None = None,
) -> NullBand:
    """Null band of a statistic over independent mimics of the table.

    ``statistic`` is "mutual_information" or "conditional_entropy";
    percentiles use linear interpolation.  Fewer than ~1000 replicates
    give unstable tail percentiles.
    """
    if statistic not in ("mutual_information", "conditional_entropy"):
        raise ValueError(f"unknown statistic {statistic!r}")
    if n_replicates < 2:
        raise ValueError("need at least 2 replicates")
    if not isinstance(rng, np.random.Generator):
        rng = child_rng(0 if rng is None else int(rng))
    ce = mimic_ce_samples(table, n_replicates, rng)
    if statistic == "conditional_entropy":
        samples = ce
    else:
        samples = np.maximum(column_margin_entropy(table) - ce, 0.0)
    return band_from_samples(statistic, samples)


def c1_test(observed: float, band: NullBand) -> C1Verdict:
    """Confirmed iff strictly above the 97.5% percentile of the null."""
    if observed > band.q975:
        status = "confirmed"
    elif observed < band.q025:
        status = "below_band"
    else:
        status = "within_band"
    if band.sd > 0:
        excess = (observed - band.mean) / band.sd
    elif observed > band.mean:
        excess = float("inf")
    elif observed < band.mean:
        excess = float("-inf")
    else:
        excess = 0.0
    return C1Verdict(observed=float(observed), band=band, status=status, excess_sd=excess)


@dataclass(frozen=True)
class ColumnVerdict:
    """Per-response-column comparison of the observed row mix to its null."""

    column: object
    observed: float
    band: NullBand
    flagged: bool


def localize_differences(
    table: ContingencyTable,
    n_replicates: int = 1000,
    rng: np.random.Generator | int | None = None,
) -> list[ColumnVerdict]:
    """Flag response columns whose row-mix entropy falls outside its null band.

    Each column's null redraws its total from a multinomial over the rows
    with the observed row-margin proportions.  A single-column table has
    nothing to localize (the column is the margin) and is never flagged.
    """
    if not isinstance(rng, np.random.Generator):
        rng = child_rng(0 if rng is None else int(rng))
    probs = table.row_margin / table.total
    observed = per_column_row_entropy(table)
    out = []
    for c, (key, obs) in enumerate(observed):
        n_c = int(table.col_margin[c])
        draws = rng.multinomial(n_c, probs, size=n_replicates).astype(float)
        totals = draws.sum(axis=1)
        totals[totals == 0] = 1.0
        pos = draws > 0
        xlogx = np.where(pos, draws * np.log(np.where(pos, draws, 1.0)), 0.0)
        ents = np.log(np.maximum(totals, 1.0)) - xlogx.sum(axis=1) / totals
        ents[draws.sum(axis=1) == 0] = 0.0
        band = band_from_samples("column_row_entropy", ents)
        out.append(
            ColumnVerdict(
                column=key,
                observed=obs,
                band=band,
                flagged=table.cols > 1 and (obs > band.q975 or obs < band.q025),
            )
        )
    return out


def synthetic_noise_series(
    n: int, n_bins: int, rng: np.random.Generator
) -> CategoricalSeries:
    """One i.i.d. uniform feature, binned 1+K+1 like a real covariate."""
    values = rng.random(n)
    scheme = quantile_bins(values, max(n_bins - 2, 1))
    return apply_bins(values, scheme)


def noise_reference_band(
    response: CategoricalSeries,
    subset_size: int,
    n_bins: int,
    n_replicates: int = 100,
    rng: np.random.Generator | int | None = None,
) -> NullBand:
    """Distribution of H[Y | k synthetic independent features].

    This is the dimension-matched reference level for CE drops: each
    replicate bins ``subset_size`` fresh uniform features, fuses them and
    measures the conditional entropy against the given response.
    """
    if subset_size < 0:
        raise ValueError("subset_size must be >= 0")
    if not isinstance(rng, np.random.Generator):
        rng = child_rng(0 if rng is None else int(rng))
    n = len(response)
    if subset_size == 0:
        h = counts_entropy(np.bincount(response.labels, minlength=response.cardinality))
        return NullBand("conditional_entropy", 2, h, 0.0, h, h, None)
    samples = np.empty(n_replicates)
    for b in range(n_replicates):
        series = [synthetic_noise_series(n, n_bins, rng) for _ in range(subset_size)]
        fused = series[0] if subset_size == 1 else product_categories(series)
        samples[b] = conditional_entropy(crosstab(fused, response))
    return band_from_samples("conditional_entropy", samples)


def noise_padded_reference(
    response: CategoricalSeries,
    subset_size: int,
    n_bins: int,
    n_replicates: int = 100,
    rng: np.random.Generator | int | None = None,
) -> float:
    """Reference level H^(k)[Y]: mean of the synthetic-noise CE ensemble."""
    return noise_reference_band(
        response, subset_size, n_bins, n_replicates=n_replicates, rng=rng
    ).mean
