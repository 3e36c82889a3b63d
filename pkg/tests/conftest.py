import numpy as np
import pytest

from ceda.categorize import apply_bins, quantile_bins
from ceda.genlab import GeneratorSpec, sample


def binned(values, k_interior=10):
    """1+K+1 categorization with the default quantile anchors."""
    return apply_bins(values, quantile_bins(values, k_interior))


@pytest.fixture(scope="session")
def two_normal_data():
    """One large draw of the balanced two-normal study (Y plus group id V1)."""
    return sample(GeneratorSpec("ex1", 20_000, seed=1))


@pytest.fixture(scope="session")
def interaction_data():
    """Additive X1 plus sin(2*pi*(X2+X3)) with X4 pure noise, N=10^4."""
    return sample(GeneratorSpec("ex4", 10_000, seed=1))


def random_table_counts(rng, max_rows=8, max_cols=8, max_count=60):
    """A random valid count matrix with no all-zero rows."""
    r = int(rng.integers(1, max_rows + 1))
    c = int(rng.integers(1, max_cols + 1))
    counts = rng.integers(0, max_count, size=(r, c))
    counts[counts.sum(axis=1) == 0, rng.integers(c)] += 1
    return counts


def table_from_counts(counts):
    from ceda.tabulate import ContingencyTable

    counts = np.asarray(counts, dtype=np.int64)
    return ContingencyTable(
        counts=counts,
        row_keys=tuple((i,) for i in range(counts.shape[0])),
        col_keys=tuple(range(counts.shape[1])),
        total=int(counts.sum()),
    )
