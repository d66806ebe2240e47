"""Conditional-independence testing for categorical data.

The G-square likelihood-ratio statistic is computed per stratum of the
conditioning set and referred to a chi-square tail. Degrees of freedom use
the declared state-space cardinalities, never the observed support, so
results are reproducible across samples of the same variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special

from .bayesnet import Dataset
from .errors import DegenerateError, DomainError, EmptyDataError
from .graph import VarId

# Below this many rows per conditioning cell (on average) the test refuses
# to commit and reports insufficient data instead of a p-value.
MIN_ROWS_PER_CELL = 10


@dataclass(frozen=True)
class CiResult:
    statistic: float
    dof: int
    p_value: float
    insufficient_data: bool = False


def chi2_sf(statistic: float, dof: int) -> float:
    """Upper-tail probability of a chi-square variate: Q(dof/2, statistic/2)."""
    if statistic < 0:
        raise DomainError(f"statistic must be nonnegative, got {statistic}")
    if dof < 1:
        raise DomainError(f"dof must be >= 1, got {dof}")
    return float(special.gammaincc(dof / 2.0, statistic / 2.0))


def g_square(dataset: Dataset, x: VarId, y: VarId, cond: Iterable[VarId] = ()) -> CiResult:
    """G-square test of ``x`` independent of ``y`` given ``cond``.

    The statistic is 2 * sum(observed * ln(observed / expected)) over the
    x-by-y table inside each stratum of the conditioning variables; empty
    cells and empty strata contribute zero. Raises DegenerateError when the
    state spaces leave zero degrees of freedom and EmptyDataError on an
    empty dataset.
    """
    cond = tuple(cond)
    if x == y or x in cond or y in cond:
        raise DomainError("x, y, and conditioning set must be distinct")
    jx = dataset.column_pos(x)
    jy = dataset.column_pos(y)
    jz = [dataset.column_pos(z) for z in cond]
    cards = dataset.cardinalities
    kx, ky = cards[jx], cards[jy]
    kz = [cards[j] for j in jz]
    n_strata = int(np.prod(kz)) if kz else 1

    dof = (kx - 1) * (ky - 1) * n_strata
    if dof == 0:
        raise DegenerateError("zero degrees of freedom for the given state spaces")

    if dataset.n_rows < MIN_ROWS_PER_CELL * n_strata:
        if dataset.n_rows == 0:
            raise EmptyDataError("no rows to test")
        return CiResult(statistic=0.0, dof=dof, p_value=1.0, insufficient_data=True)

    # Flatten (strata, x, y) into one index for a single bincount pass.
    strata = np.zeros(dataset.n_rows, dtype=np.int64)
    for j, k in zip(jz, kz):
        strata = strata * k + dataset.matrix[:, j]
    flat = (strata * kx + dataset.matrix[:, jx]) * ky + dataset.matrix[:, jy]
    counts = np.bincount(flat, minlength=n_strata * kx * ky).reshape(n_strata, kx, ky)

    totals = counts.sum(axis=(1, 2), keepdims=True).astype(float)
    rows = counts.sum(axis=2, keepdims=True).astype(float)
    cols = counts.sum(axis=1, keepdims=True).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        expected = rows * cols / totals
        ratio = np.where(counts > 0, counts / expected, 1.0)
        stat = 2.0 * float(np.sum(counts * np.log(ratio)))
    stat = max(stat, 0.0)
    return CiResult(statistic=stat, dof=dof, p_value=chi2_sf(stat, dof))
