from __future__ import annotations

import numpy as np
import pytest

from cdharness.citests import chi2_sf, g_square
from cdharness.errors import DegenerateError, DomainError, EmptyDataError

from conftest import binary_dataset
from oracles import chi2_sf_quad, g_square_brute


def dataset_from_counts(counts) -> "Dataset":
    """Expand a 2x2 count table into explicit rows."""
    rows = []
    for i, row in enumerate(counts):
        for j, c in enumerate(row):
            rows.extend([[i, j]] * c)
    return binary_dataset((0, 1), np.array(rows))


class TestGSquare:
    def test_exactly_independent_counts(self):
        ds = dataset_from_counts([[25, 25], [25, 25]])
        res = g_square(ds, 0, 1)
        assert res.statistic == pytest.approx(0.0, abs=1e-12)
        assert res.p_value == pytest.approx(1.0)

    def test_dof_uses_declared_cardinalities(self):
        # |X|=2, |Y|=3, conditioning cardinalities {2, 2} -> dof 8
        rng = np.random.Generator(np.random.Philox(key=np.uint64(3)))
        n = 500
        matrix = np.column_stack([
            rng.integers(0, 2, n), rng.integers(0, 3, n),
            rng.integers(0, 2, n), rng.integers(0, 2, n),
        ])
        from cdharness.bayesnet import Dataset
        ds = Dataset(
            columns=(0, 1, 2, 3),
            labels=(("a", "b"), ("a", "b", "c"), ("a", "b"), ("a", "b")),
            matrix=matrix,
        )
        assert g_square(ds, 0, 1, (2, 3)).dof == 8

    def test_dependent_counts_match_brute_force(self):
        counts = [[30, 10], [10, 30]]
        ds = dataset_from_counts(counts)
        res = g_square(ds, 0, 1)
        oracle_stat = g_square_brute([counts])
        assert res.statistic == pytest.approx(oracle_stat, rel=1e-12)
        # frozen oracle values: 2*sum(O ln(O/E)) and its quadrature tail
        assert res.statistic == pytest.approx(20.929925, abs=1e-5)
        assert res.p_value == pytest.approx(chi2_sf_quad(oracle_stat, 1), abs=1e-10)
        assert res.p_value == pytest.approx(4.7639e-06, rel=1e-3)

    def test_conditional_statistic_matches_brute_force(self):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(8)))
        n = 2000
        z = rng.integers(0, 2, n)
        x = (rng.random(n) < 0.3 + 0.4 * z).astype(np.int64)
        y = (rng.random(n) < 0.7 - 0.4 * z).astype(np.int64)
        ds = binary_dataset((0, 1, 2), np.column_stack([x, y, z]))
        res = g_square(ds, 0, 1, (2,))
        tables = []
        for zz in (0, 1):
            mask = z == zz
            table = np.zeros((2, 2))
            for xi, yi in zip(x[mask], y[mask]):
                table[xi, yi] += 1
            tables.append(table)
        assert res.statistic == pytest.approx(g_square_brute(tables), rel=1e-12)
        assert res.dof == 2

    def test_invariant_to_state_relabeling_and_row_order(self):
        ds = dataset_from_counts([[30, 10], [12, 28]])
        base = g_square(ds, 0, 1).statistic
        flipped = binary_dataset((0, 1), 1 - ds.matrix)
        assert g_square(flipped, 0, 1).statistic == pytest.approx(base)
        rng = np.random.Generator(np.random.Philox(key=np.uint64(1)))
        shuffled = binary_dataset((0, 1), ds.matrix[rng.permutation(ds.n_rows)])
        assert g_square(shuffled, 0, 1).statistic == pytest.approx(base)

    def test_insufficient_data_flag(self):
        ds = binary_dataset((0, 1, 2), np.array([[0, 1, 0], [1, 0, 1]] * 6))
        res = g_square(ds, 0, 1, (2,))  # 12 rows < 10 * 2 strata
        assert res.insufficient_data and res.p_value == 1.0

    def test_empty_data_rejected(self):
        ds = binary_dataset((0, 1), np.zeros((0, 2), dtype=np.int64))
        with pytest.raises(EmptyDataError):
            g_square(ds, 0, 1)

    def test_degenerate_state_space_rejected(self):
        from cdharness.bayesnet import Dataset
        ds = Dataset(columns=(0, 1), labels=(("only",), ("a", "b")),
                     matrix=np.zeros((50, 2), dtype=np.int64))
        with pytest.raises(DegenerateError):
            g_square(ds, 0, 1)

    def test_identical_column_arguments_rejected(self):
        ds = dataset_from_counts([[25, 25], [25, 25]])
        with pytest.raises(DomainError):
            g_square(ds, 0, 0)


class TestChi2Sf:
    def test_at_zero_is_one(self):
        for dof in (1, 2, 5, 50):
            assert chi2_sf(0.0, dof) == pytest.approx(1.0)

    def test_classic_quantile(self):
        assert chi2_sf(3.841, 1) == pytest.approx(0.0500, abs=1e-3)
        assert chi2_sf(3.841, 1) == pytest.approx(chi2_sf_quad(3.841, 1), abs=1e-10)

    def test_matches_quadrature_on_grid(self):
        for dof in (1, 2, 3, 10, 50, 200):
            for stat in (0.5, 3.0, 12.0, 80.0, 400.0, 1000.0):
                assert chi2_sf(stat, dof) == pytest.approx(
                    chi2_sf_quad(stat, dof), abs=1e-8
                )

    def test_monotone_decreasing_in_statistic(self):
        grid = np.linspace(0, 60, 200)
        values = [chi2_sf(x, 3) for x in grid]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            chi2_sf(-1.0, 3)
        with pytest.raises(DomainError):
            chi2_sf(1.0, 0)


class TestCalibration:
    def test_null_p_values_are_uniform(self):
        # fair independent coins, N=1000, 2000 replicates; KS distance < 0.06
        rng = np.random.Generator(np.random.Philox(key=np.uint64(77)))
        pvals = []
        for _ in range(2000):
            matrix = rng.integers(0, 2, size=(1000, 2))
            ds = binary_dataset((0, 1), matrix)
            pvals.append(g_square(ds, 0, 1).p_value)
        pvals = np.sort(pvals)
        grid = (np.arange(1, len(pvals) + 1)) / len(pvals)
        ks = float(np.max(np.abs(pvals - grid)))
        assert ks < 0.06

    def test_power_against_strong_dependence(self):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(78)))
        rejections = 0
        for _ in range(200):
            x = rng.integers(0, 2, 1000)
            y = np.where(rng.random(1000) < 0.9, x, 1 - x)
            ds = binary_dataset((0, 1), np.column_stack([x, y]))
            rejections += g_square(ds, 0, 1).p_value < 0.001
        assert rejections >= 198
