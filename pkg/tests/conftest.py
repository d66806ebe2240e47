from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cdharness.bayesnet import Dataset, load_builtin


@pytest.fixture(scope="session")
def asia():
    return load_builtin("asia")


@pytest.fixture(scope="session")
def earthquake():
    return load_builtin("earthquake")


@pytest.fixture(scope="session")
def survey():
    return load_builtin("survey")


def binary_dataset(columns, matrix) -> Dataset:
    matrix = np.asarray(matrix)
    return Dataset(
        columns=tuple(columns),
        labels=tuple(("0", "1") for _ in columns),
        matrix=matrix,
    )


def collider_sample(n: int, seed: int) -> Dataset:
    """a -> c <- b with marginal dependence on both parents."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    a = rng.integers(0, 2, n)
    b = rng.integers(0, 2, n)
    c = (rng.random(n) < 0.05 + 0.45 * a + 0.45 * b).astype(np.int64)
    return binary_dataset((0, 1, 2), np.column_stack([a, b, c]))


def chain_sample(n: int, seed: int, flip: float = 0.15) -> Dataset:
    """a -> b -> c with symmetric noise."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    a = rng.integers(0, 2, n)
    b = np.where(rng.random(n) < 1 - flip, a, 1 - a)
    c = np.where(rng.random(n) < 1 - flip, b, 1 - b)
    return binary_dataset((0, 1, 2), np.column_stack([a, b, c]))
