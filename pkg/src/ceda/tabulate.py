"""Contingency tables and the Shannon-entropy measurements evaluated on them.

Conventions: covariate categories on rows, response categories on columns.
Empty covariate rows are never stored; empty response columns are kept so
tables built over different covariate subsets share one column axis.
All entropies are in nats and 0*ln(0) is taken as 0.  No bias correction
or smoothing is applied anywhere.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CategoricalSeries",
    "ContingencyTable",
    "EntropyReport",
    "column_margin_entropy",
    "conditional_entropy",
    "crosstab",
    "entropy_report",
    "joint_entropy",
    "mutual_information",
    "per_column_row_entropy",
    "table_to_tsv",
]

#: floating-point slack below which a negative mutual information is clamped to 0
MI_CLAMP = 1e-12


def _xlogx(a: np.ndarray) -> np.ndarray:
    """x*ln(x) elementwise with the 0*ln(0)=0 convention."""
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log(a[pos])
    return out


def counts_entropy(counts: np.ndarray) -> float:
    """Shannon entropy (nats) of the distribution proportional to ``counts``."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return 0.0
    return float(np.log(total) - _xlogx(counts).sum() / total)


@dataclass(frozen=True)
class CategoricalSeries:
    """Per-record category labels for one (possibly fused) variable.

    ``labels`` are 0-based category indices; ``cardinality`` counts the
    distinct categories the variable can take (categories may be unobserved).
    """

    labels: np.ndarray
    cardinality: int
    names: tuple | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or labels.size < 1:
            raise ValueError("labels must be a non-empty 1-D sequence")
        if self.cardinality < 1:
            raise ValueError("cardinality must be >= 1")
        if labels.min() < 0 or labels.max() >= self.cardinality:
            raise ValueError("every label must satisfy 0 <= label < cardinality")
        if self.names is not None and len(self.names) != self.cardinality:
            raise ValueError("names must have one entry per category")

    def __len__(self) -> int:
        return int(self.labels.size)


@dataclass(frozen=True)
class ContingencyTable:
    """R x C count matrix: occupied covariate categories vs response categories."""

    counts: np.ndarray
    row_keys: tuple
    col_keys: tuple
    total: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2:
            raise ValueError("counts must be 2-D")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        if int(counts.sum()) != self.total:
            raise ValueError("cell counts must sum to total")
        if (counts.sum(axis=1) == 0).any():
            raise ValueError("all-zero covariate rows must not be stored")
        if len(self.row_keys) != counts.shape[0] or len(self.col_keys) != counts.shape[1]:
            raise ValueError("row/col key lengths must match the count matrix")

    @property
    def rows(self) -> int:
        return self.counts.shape[0]

    @property
    def cols(self) -> int:
        return self.counts.shape[1]

    @property
    def row_margin(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_margin(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def avg_cell_count(self) -> float:
        return self.total / (self.rows * self.cols)


@dataclass(frozen=True)
class EntropyReport:
    """Margin entropy, conditional entropy and their difference for one table."""

    h_y: float
    h_y_given_a: float
    mutual_info: float
    rows: int
    cols: int
    avg_cell_count: float

    def to_json(self, total: int | None = None) -> str:
        obj = {
            "rows": self.rows,
            "cols": self.cols,
            "total": total if total is not None else round(self.avg_cell_count * self.rows * self.cols),
            "h_y": self.h_y,
            "h_y_given_a": self.h_y_given_a,
            "mi": self.mutual_info,
        }
        return json.dumps(obj)


def crosstab(covariate, response: CategoricalSeries) -> ContingencyTable:
    """Cross-tabulate one covariate (or a tuple of them) against the response.

    Row keys are the occupied covariate tuples only; columns cover every
    response category, empty ones included.
    """
    if isinstance(covariate, CategoricalSeries):
        covs = (covariate,)
    else:
        covs = tuple(covariate)
        if not covs:
            raise ValueError("empty covariate input")
    n = len(response)
    for c in covs:
        if len(c) != n:
            raise ValueError("covariate and response lengths differ")
    stacked = np.column_stack([c.labels for c in covs])
    uniq, row_idx = np.unique(stacked, axis=0, return_inverse=True)
    row_idx = row_idx.ravel()
    n_rows = uniq.shape[0]
    n_cols = response.cardinality
    counts = np.bincount(row_idx * n_cols + response.labels, minlength=n_rows * n_cols)
    counts = counts.reshape(n_rows, n_cols)
    row_keys = tuple(tuple(int(v) for v in key) for key in uniq)
    if response.names is not None:
        col_keys = tuple(response.names)
    else:
        col_keys = tuple(range(n_cols))
    return ContingencyTable(counts=counts, row_keys=row_keys, col_keys=col_keys, total=n)


def column_margin_entropy(table: ContingencyTable) -> float:
    """Entropy of the response margin, H[Y], skipping empty columns."""
    if table.total <= 0:
        raise ValueError("table total must be positive")
    return counts_entropy(table.col_margin)


def conditional_entropy(table: ContingencyTable) -> float:
    """Row-weighted entropy of the within-row response distributions, H[Y|A]."""
    if table.total <= 0:
        raise ValueError("table total must be positive")
    counts = table.counts.astype(float)
    n = float(table.total)
    row_sums = counts.sum(axis=1)
    h = (_xlogx(row_sums).sum() - _xlogx(counts).sum()) / n
    return float(max(h, 0.0))


def mutual_information(table: ContingencyTable) -> float:
    """I[Y;A] = H[Y] - H[Y|A], with tiny float negatives clamped to zero."""
    mi = column_margin_entropy(table) - conditional_entropy(table)
    if -MI_CLAMP < mi < 0.0:
        mi = 0.0
    return mi


def joint_entropy(table: ContingencyTable) -> float:
    """Entropy of the joint cell distribution, H[Y, A]."""
    if table.total <= 0:
        raise ValueError("table total must be positive")
    return counts_entropy(table.counts.ravel())


def per_column_row_entropy(table: ContingencyTable) -> list[tuple]:
    """For each response column, the entropy of the row-label mix inside it.

    Returns (column_key, nats) pairs; an empty column contributes 0.
    """
    if table.total <= 0:
        raise ValueError("table total must be positive")
    out = []
    for c in range(table.cols):
        out.append((table.col_keys[c], counts_entropy(table.counts[:, c])))
    return out


def entropy_report(table: ContingencyTable) -> EntropyReport:
    h_y = column_margin_entropy(table)
    h_cond = conditional_entropy(table)
    mi = h_y - h_cond
    if -MI_CLAMP < mi < 0.0:
        mi = 0.0
    return EntropyReport(
        h_y=h_y,
        h_y_given_a=h_cond,
        mutual_info=mi,
        rows=table.rows,
        cols=table.cols,
        avg_cell_count=table.avg_cell_count,
    )


def table_to_tsv(table: ContingencyTable) -> str:
    """Serialize a table: row-key columns first, then one column per response category."""
    buf = io.StringIO()
    key_width = len(table.row_keys[0]) if table.row_keys else 1
    header = [f"key{i}" for i in range(key_width)] + [str(k) for k in table.col_keys]
    buf.write("\t".join(header) + "\n")
    for key, row in zip(table.row_keys, table.counts):
        buf.write("\t".join([str(k) for k in key] + [str(int(v)) for v in row]) + "\n")
    return buf.getvalue()
