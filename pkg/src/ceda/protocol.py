"""Covariate-subset ledgers and the major-factor selection protocol.

Everything here follows one comparability rule: conditional entropies are
only compared between tables of the same dimension.  The reference level
for a size-k subset is the conditional entropy given k noise features
(user-designated ones when available, otherwise synthetic uniforms binned
with the same ladder), and per-feature effects inside a size-k subset are
measured with noise padding up to the same dimension.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ceda.tabulate import (
    CategoricalSeries,
    column_margin_entropy,
    conditional_entropy,
    crosstab,
    entropy_report,
    mutual_information,
)
from ceda.categorize import fuse_features, product_categories
from ceda.nullsim import (
    C1Verdict,
    NullBand,
    band_from_samples,
    c1_test,
    child_rng,
    null_band,
    synthetic_noise_series,
)

__all__ = [
    "GridCell",
    "MajorFactorReport",
    "PairAnalysis",
    "ProtocolConfig",
    "SubsetEvaluator",
    "SubsetLedgerEntry",
    "build_ledger",
    "classify_subset",
    "enumerate_subsets",
    "ledger_to_tsv",
    "mi_grid",
    "sce_star_drop",
    "select_major_factors",
]

# Pair/subset classifications
INTERACTION = "interaction"
ECOLOGICAL = "ecological"
NON_COEXISTENT = "non_coexistent"
DEPENDENCE_LINK = "dependence_link"
NOT_SIGNIFICANT = "not_significant"
NO_ADDED_EFFECT = "no_added_effect"
UNDETERMINED = "undetermined"
UNDETERMINED_DIMENSION = "undetermined (dimension)"


@dataclass(frozen=True)
class ProtocolConfig:
    """Thresholds and budgets for ledger building and factor selection.

    The interaction ratio and the coexistence margin are deliberately
    configurable: the underlying analyses argue with ratios ("more than 10
    times", "5 times larger") rather than fixed constants.
    """

    max_order: int = 2
    replicates: int = 1000
    ref_replicates: int = 100
    pad_replicates: int = 30
    seed: int = 0
    r_int: float = 3.0
    eco_low: float = 0.8
    eco_high: float = 1.5
    coexist_margin: float = 0.05
    candidate_margin: float = 0.01
    cell_floor: float = 1.0
    cell_budget: int = 2_000_000
    noise_features: tuple = ()
    threads: int = 1


@dataclass(frozen=True)
class SubsetLedgerEntry:
    """One covariate subset's conditional-entropy bookkeeping."""

    subset: tuple
    order: int
    ce: float
    ce_drop: float
    sce_drop: float
    sce_star_drop: float | None
    table_rows: int
    table_cols: int
    avg_cell: float
    reliable: bool
    c1: C1Verdict | None
    synthetic_noise: bool = False


@dataclass(frozen=True)
class PairAnalysis:
    """Dimension-matched comparison of a feature pair's joint vs. separate effects."""

    pair: tuple
    joint_drop: float
    part_drops: dict
    excess: float
    ratio: float
    classification: str
    significant: bool


@dataclass(frozen=True)
class MajorFactorReport:
    """Confirmed factors, their classifications and the (in)compatible collections."""

    confirmed: list
    chief_collection: tuple
    alternative_collections: list
    pair_analyses: list
    excluded: list
    reference_levels: dict


def enumerate_subsets(features, max_order: int) -> list[tuple]:
    """All subsets of size 1..max_order in (size, lexicographic) order."""
    features = list(features)
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    if max_order > len(features):
        raise ValueError("max_order exceeds the feature count")
    out = []
    for k in range(1, max_order + 1):
        out.extend(itertools.combinations(features, k))
    return out


class SubsetEvaluator:
    """Caches fused series, tables and CEs over one categorized dataset."""

    def __init__(self, covariates: dict, response: CategoricalSeries, config: ProtocolConfig):
        self.covariates = dict(covariates)
        self.response = response
        self.config = config
        self.n = len(response)
        self._fused: dict = {}
        self._tables: dict = {}
        self._pad_cache: dict = {}
        self._ref_cache: dict = {}
        self.h_y = column_margin_entropy(
            crosstab(next(iter(self.covariates.values())), response)
        )

    def fused(self, subset: tuple) -> CategoricalSeries:
        if subset not in self._fused:
            series = [self.covariates[f] for f in subset]
            self._fused[subset] = series[0] if len(series) == 1 else product_categories(series)
        return self._fused[subset]

    def table(self, subset: tuple):
        if subset not in self._tables:
            self._tables[subset] = crosstab(self.fused(subset), self.response)
        return self._tables[subset]

    def ce(self, subset: tuple) -> float:
        return conditional_entropy(self.table(subset))

    def _bins_for_noise(self) -> int:
        return max(c.cardinality for c in self.covariates.values())

    def reference_band(self, k: int) -> NullBand:
        """Band of H[Y | k noise features] at dimension k.

        Designated noise features give the reference when at least k of them
        exist (all k-combinations); otherwise synthetic uniforms are drawn.
        """
        if k in self._ref_cache:
            return self._ref_cache[k]
        cfg = self.config
        noise = [f for f in cfg.noise_features if f in self.covariates]
        if len(noise) >= max(k, 2) and k >= 1:
            samples = [
                self.ce(tuple(sorted(combo)))
                for combo in itertools.combinations(noise, k)
            ]
            if len(samples) < 2:
                samples = samples * 2
            band = band_from_samples("conditional_entropy", np.asarray(samples))
        else:
            rng = child_rng(cfg.seed, 90, k)
            n_bins = self._bins_for_noise()
            samples = np.empty(cfg.ref_replicates)
            for b in range(cfg.ref_replicates):
                cols = [
                    synthetic_noise_series(self.n, n_bins, rng) for _ in range(k)
                ]
                fused = cols[0] if k == 1 else product_categories(cols)
                samples[b] = conditional_entropy(crosstab(fused, self.response))
            band = band_from_samples("conditional_entropy", samples)
        self._ref_cache[k] = band
        return band

    def padded_ce_samples(self, subset: tuple, target_order: int) -> np.ndarray:
        """H[Y | subset + noise padding] samples at dimension ``target_order``."""
        pad = target_order - len(subset)
        key = (subset, target_order)
        if key in self._pad_cache:
            return self._pad_cache[key]
        if pad < 0:
            raise ValueError("target order below the subset size")
        if pad == 0:
            samples = np.array([self.ce(subset), self.ce(subset)])
        else:
            cfg = self.config
            noise = [
                f
                for f in cfg.noise_features
                if f in self.covariates and f not in subset
            ]
            samples_list = []
            if len(noise) >= pad:
                for combo in itertools.combinations(noise, pad):
                    fused = product_categories(
                        [self.fused(subset)] + [self.covariates[f] for f in combo]
                    )
                    samples_list.append(conditional_entropy(crosstab(fused, self.response)))
            if len(samples_list) < 2:
                rng = child_rng(cfg.seed, 91, target_order, _subset_tag(subset))
                n_bins = self._bins_for_noise()
                for _ in range(cfg.pad_replicates):
                    cols = [
                        synthetic_noise_series(self.n, n_bins, rng) for _ in range(pad)
                    ]
                    fused = product_categories([self.fused(subset)] + cols)
                    samples_list.append(
                        conditional_entropy(crosstab(fused, self.response))
                    )
            samples = np.asarray(samples_list)
        self._pad_cache[key] = samples
        return samples

    def padded_ce(self, subset: tuple, target_order: int) -> float:
        return float(self.padded_ce_samples(subset, target_order).mean())


def _subset_tag(subset: tuple) -> int:
    import zlib

    return zlib.crc32("|".join(str(f) for f in subset).encode())


def sce_star_drop(
    evaluator: SubsetEvaluator, subset: tuple, added_feature
) -> tuple[float, bool]:
    """Effect of one feature measured at the full subset's table dimension.

    Returns H[Y | rest + noise pad] - H[Y | subset] and whether synthetic
    noise had to be drawn for the pad.
    """
    if added_feature not in subset:
        raise ValueError("added_feature must belong to the subset")
    rest = tuple(f for f in subset if f != added_feature)
    if not rest:
        ref = evaluator.reference_band(1).mean
        return ref - evaluator.ce(subset), not bool(evaluator.config.noise_features)
    padded = evaluator.padded_ce(rest, len(subset))
    noise = [f for f in evaluator.config.noise_features if f in evaluator.covariates]
    synthetic = len(noise) < 1
    return padded - evaluator.ce(subset), synthetic


def classify_subset(
    evaluator: SubsetEvaluator, subset: tuple, config: ProtocolConfig
) -> PairAnalysis:
    """Interaction / ecological / non-coexistence call at matched dimension.

    ``joint_drop`` and the per-feature ``part_drops`` are all measured
    against the size-k noise reference, so the comparison is scale-free.
    """
    k = len(subset)
    ref = evaluator.reference_band(k)
    margin = config.candidate_margin
    table = evaluator.table(subset)
    if table.avg_cell_count < config.cell_floor:
        return PairAnalysis(
            pair=subset,
            joint_drop=float("nan"),
            part_drops={},
            excess=float("nan"),
            ratio=float("nan"),
            classification=UNDETERMINED_DIMENSION,
            significant=False,
        )
    ce_joint = evaluator.ce(subset)
    joint_drop = ref.mean - ce_joint
    joint_sig = ce_joint < ref.q025 - margin
    parts = {}
    part_sig = {}
    for f in subset:
        padded = evaluator.padded_ce((f,), k)
        parts[f] = ref.mean - padded
        part_sig[f] = padded < ref.q025 - margin
    sum_parts = sum(max(v, 0.0) for v in parts.values())
    floor = max(ref.mean - ref.q025, 1e-9)
    ratio = joint_drop / max(sum_parts, floor)
    excess = joint_drop - sum_parts

    if not joint_sig:
        cls = NOT_SIGNIFICANT
    elif ratio >= config.r_int:
        cls = INTERACTION
    elif excess < -config.coexist_margin:
        cls = NON_COEXISTENT
    elif not all(part_sig.values()):
        cls = DEPENDENCE_LINK if excess > config.coexist_margin else NO_ADDED_EFFECT
    elif config.eco_low <= ratio <= config.eco_high or abs(excess) <= config.coexist_margin:
        cls = ECOLOGICAL
    else:
        cls = UNDETERMINED
    return PairAnalysis(
        pair=subset,
        joint_drop=joint_drop,
        part_drops=parts,
        excess=excess,
        ratio=ratio,
        classification=cls,
        significant=joint_sig,
    )


def _ledger_entry(
    evaluator: SubsetEvaluator, subset: tuple, config: ProtocolConfig
) -> SubsetLedgerEntry:
    k = len(subset)
    cardinality_product = 1
    for f in subset:
        cardinality_product *= evaluator.covariates[f].cardinality
    est_cells = cardinality_product * evaluator.response.cardinality
    if est_cells > config.cell_budget:
        return SubsetLedgerEntry(
            subset=subset,
            order=k,
            ce=float("nan"),
            ce_drop=float("nan"),
            sce_drop=float("nan"),
            sce_star_drop=None,
            table_rows=0,
            table_cols=evaluator.response.cardinality,
            avg_cell=0.0,
            reliable=False,
            c1=None,
        )
    table = evaluator.table(subset)
    ce = evaluator.ce(subset)
    ref = evaluator.reference_band(k)
    ce_drop = ref.mean - ce
    if k == 1:
        sce = ce_drop
    else:
        best_proper = min(
            evaluator.ce(sub)
            for sub in itertools.combinations(subset, k - 1)
        )
        sce = best_proper - ce
    reliable = table.avg_cell_count >= config.cell_floor
    c1 = None
    sce_star = None
    synthetic = False
    if reliable:
        band = null_band(
            table,
            "mutual_information",
            config.replicates,
            child_rng(config.seed, 1, _subset_tag(subset)),
        )
        c1 = c1_test(mutual_information(table), band)
        if k >= 2:
            # effect of the weakest member at the subset's own dimension
            weakest = max(
                subset, key=lambda f: evaluator.ce(tuple(x for x in subset if x != f))
            )
            sce_star, synthetic = sce_star_drop(evaluator, subset, weakest)
    return SubsetLedgerEntry(
        subset=subset,
        order=k,
        ce=ce,
        ce_drop=ce_drop,
        sce_drop=sce,
        sce_star_drop=sce_star,
        table_rows=table.rows,
        table_cols=table.cols,
        avg_cell=table.avg_cell_count,
        reliable=reliable,
        c1=c1,
        synthetic_noise=synthetic,
    )


def build_ledger(
    covariates: dict,
    response: CategoricalSeries,
    max_order: int,
    config: ProtocolConfig | None = None,
) -> list[SubsetLedgerEntry]:
    """Evaluate every subset up to ``max_order``; sorted by CE within each order.

    Subsets whose estimated table size exceeds the cell budget are listed
    but marked unreliable rather than evaluated.
    """
    config = config or ProtocolConfig(max_order=max_order)
    evaluator = SubsetEvaluator(covariates, response, config)
    subsets = enumerate_subsets(sorted(covariates), max_order)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            entries = list(
                pool.map(lambda s: _ledger_entry(evaluator, s, config), subsets)
            )
    else:
        entries = [_ledger_entry(evaluator, s, config) for s in subsets]
    entries.sort(key=lambda e: (e.order, e.ce if np.isfinite(e.ce) else np.inf))
    return entries


def ledger_to_tsv(entries) -> str:
    lines = [
        "order\tsubset\tce\tce_drop\tsce_drop\tsce_star_drop\trows\tavg_cell\tc1_status"
    ]
    for e in entries:
        star = "" if e.sce_star_drop is None else f"{e.sce_star_drop:.6f}"
        status = e.c1.status if e.c1 is not None else (
            "unreliable" if not e.reliable else ""
        )
        lines.append(
            f"{e.order}\t{'_'.join(str(f) for f in e.subset)}\t{e.ce:.6f}\t"
            f"{e.ce_drop:.6f}\t{e.sce_drop:.6f}\t{star}\t{e.table_rows}\t"
            f"{e.avg_cell:.4f}\t{status}"
        )
    return "\n".join(lines) + "\n"


def _maximal_coexistent_sets(candidates, conflicts) -> list[tuple]:
    """All maximal candidate subsets containing no conflicting pair."""
    candidates = list(candidates)
    sets = []
    for r in range(len(candidates), 0, -1):
        for combo in itertools.combinations(candidates, r):
            if any(
                frozenset((a, b)) in conflicts
                for a, b in itertools.combinations(combo, 2)
            ):
                continue
            if any(set(combo) <= set(s) for s in sets):
                continue
            sets.append(combo)
    return sets


def select_major_factors(
    covariates: dict,
    response: CategoricalSeries,
    config: ProtocolConfig | None = None,
) -> MajorFactorReport:
    """Assemble the major-factor report from singleton gates and pair analyses.

    Order-1 candidates must clear the confirmability test and sit below the
    dimension-1 noise reference band.  Pairs classified as interactions
    become order-2 factors; non-coexistent pairs split the candidates into
    a chief collection (largest total drop) and alternative collections,
    the latter augmented with dependence-linked partners.
    """
    config = config or ProtocolConfig()
    evaluator = SubsetEvaluator(covariates, response, config)
    noise = set(config.noise_features)
    features = [f for f in sorted(covariates) if f not in noise]
    ref1 = evaluator.reference_band(1)
    margin = config.candidate_margin

    candidates = []
    excluded = []
    drops = {}
    for f in features:
        table = evaluator.table((f,))
        ce = evaluator.ce((f,))
        drops[f] = ref1.mean - ce
        band = null_band(
            table,
            "mutual_information",
            config.replicates,
            child_rng(config.seed, 1, _subset_tag((f,))),
        )
        verdict = c1_test(mutual_information(table), band)
        if verdict.status == "confirmed" and ce < ref1.q025 - margin:
            candidates.append(f)
        else:
            excluded.append(((f,), "not confirmed as order-1"))

    pair_analyses = []
    conflicts = set()
    links: dict = {}
    interactions = []
    if config.max_order >= 2:
        for pair in itertools.combinations(features, 2):
            analysis = classify_subset(evaluator, pair, config)
            pair_analyses.append(analysis)
            a, b = pair
            if analysis.classification == INTERACTION:
                interactions.append(pair)
            elif analysis.classification == NON_COEXISTENT:
                if a in candidates and b in candidates:
                    conflicts.add(frozenset(pair))
            elif analysis.classification == DEPENDENCE_LINK:
                for member, partner in ((a, b), (b, a)):
                    if member in candidates and partner not in candidates:
                        links.setdefault(member, set()).add(partner)

    coexistent = _maximal_coexistent_sets(candidates, conflicts)
    if coexistent:
        chief = max(
            coexistent, key=lambda s: (sum(drops[f] for f in s), tuple(sorted(s)))
        )
    else:
        chief = ()
    alternatives = []
    for s in coexistent:
        if set(s) == set(chief):
            continue
        augmented = set(s)
        for member in s:
            augmented |= links.get(member, set())
        alternatives.append(tuple(sorted(augmented, key=str)))

    confirmed = [((f,), 1, "order-1 major factor") for f in sorted(chief, key=str)]
    for pair in interactions:
        confirmed.append((pair, 2, "order-2 major factor (interaction)"))

    return MajorFactorReport(
        confirmed=confirmed,
        chief_collection=tuple(sorted(chief, key=str)),
        alternative_collections=alternatives,
        pair_analyses=pair_analyses,
        excluded=excluded,
        reference_levels={1: ref1.mean, **({2: evaluator.reference_band(2).mean} if config.max_order >= 2 else {})},
    )


@dataclass(frozen=True)
class GridCell:
    """One (response bins, covariate bins) cell of the consistency grid."""

    y_bins: int
    x_bins: int
    report: object
    band: NullBand
    verdict: C1Verdict


def mi_grid(
    y_values,
    x_values,
    y_bins_ladder,
    x_bins_ladder,
    n_replicates: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> list[GridCell]:
    """Mutual information and its null band over a ladder of K-means categorizations.

    Consistent confirmation across cells is the inference the grid supports;
    each cell's clustering and null stream derive deterministically from the
    seed, so the grid is reproducible at any thread count.
    """
    y_bins_ladder = list(y_bins_ladder)
    x_bins_ladder = list(x_bins_ladder)
    if not y_bins_ladder or not x_bins_ladder:
        raise ValueError("empty bin ladder")
    y_cat = {
        ky: fuse_features(y_values, ky, seed=seed * 1009 + ky) for ky in y_bins_ladder
    }
    x_cat = {
        kx: fuse_features(x_values, kx, seed=seed * 2003 + kx) for kx in x_bins_ladder
    }

    def cell(pair):
        ky, kx = pair
        table = crosstab(x_cat[kx], y_cat[ky])
        report = entropy_report(table)
        band = null_band(
            table, "mutual_information", n_replicates, child_rng(seed, 2, ky, kx)
        )
        return GridCell(
            y_bins=ky,
            x_bins=kx,
            report=report,
            band=band,
            verdict=c1_test(report.mutual_info, band),
        )

    pairs = [(ky, kx) for ky in y_bins_ladder for kx in x_bins_ladder]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(cell, pairs))
    return [cell(p) for p in pairs]
