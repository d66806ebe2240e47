from __future__ import annotations

import numpy as np
import pytest

from cdharness.bayesnet import ancestral_sample
from cdharness.discovery import (
    AlgoConfig,
    LinearScm,
    direct_lingam,
    generate_linear_scm_data,
)
from cdharness.errors import SingularError


def lg_config(**kw) -> AlgoConfig:
    return AlgoConfig(algorithm="direct_lingam", **kw)


def two_var_scm(noise_kind: str = "uniform") -> LinearScm:
    return LinearScm(
        order=(0, 1),
        coefficients=np.array([[0.0, 0.0], [0.8, 0.0]]),
        noise=((noise_kind, 1.0), (noise_kind, 1.0)),
    )


def dense_scm(rng: np.random.Generator, d: int = 5) -> LinearScm:
    coef = np.zeros((d, d))
    for i in range(d):
        for j in range(i):
            coef[i, j] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    return LinearScm(
        order=tuple(range(d)),
        coefficients=coef,
        noise=tuple(("uniform", 1.0) for _ in range(d)),
    )


def order_violations(scm: LinearScm, recovered_order) -> int:
    position = {v: i for i, v in enumerate(recovered_order)}
    count = 0
    for i in range(len(scm.order)):
        for j in range(i):
            if scm.coefficients[i, j] != 0 and position[j] > position[i]:
                count += 1
    return count


class TestGenerator:
    def test_zero_coefficients_give_uncorrelated_noise(self):
        scm = LinearScm(
            order=(0, 1, 2),
            coefficients=np.zeros((3, 3)),
            noise=tuple(("uniform", 1.0) for _ in range(3)),
        )
        x = generate_linear_scm_data(scm, 10000, seed=1)
        corr = np.corrcoef(x.T)
        off_diag = corr[~np.eye(3, dtype=bool)]
        assert np.abs(off_diag).max() < 0.05

    def test_zero_variance_noise_duplicates_parent(self):
        scm = LinearScm(
            order=(0, 1),
            coefficients=np.array([[0.0, 0.0], [1.0, 0.0]]),
            noise=(("uniform", 1.0), ("uniform", 0.0)),
        )
        x = generate_linear_scm_data(scm, 100, seed=2)
        assert np.allclose(x[:, 0], x[:, 1])

    def test_same_seed_identical(self):
        scm = two_var_scm()
        assert np.array_equal(
            generate_linear_scm_data(scm, 500, seed=3),
            generate_linear_scm_data(scm, 500, seed=3),
        )

    def test_noise_scales_are_standard_deviations(self):
        for kind in ("uniform", "laplace", "gaussian"):
            scm = LinearScm(
                order=(0, 1),
                coefficients=np.zeros((2, 2)),
                noise=((kind, 2.0), (kind, 0.5)),
            )
            x = generate_linear_scm_data(scm, 200000, seed=4)
            assert x[:, 0].std() == pytest.approx(2.0, rel=0.05)
            assert x[:, 1].std() == pytest.approx(0.5, rel=0.05)

    def test_forward_coefficients_rejected(self):
        with pytest.raises(ValueError):
            LinearScm(
                order=(0, 1),
                coefficients=np.array([[0.0, 0.5], [0.0, 0.0]]),
                noise=(("uniform", 1.0), ("uniform", 1.0)),
            )


class TestOrdering:
    def test_two_variable_direction_and_coefficient(self):
        x = generate_linear_scm_data(two_var_scm(), 5000, seed=3)
        out = direct_lingam(x, lg_config())
        assert out.diagnostics["causal_order"] == [0, 1]
        assert out.edges == frozenset({(0, 1)})
        assert out.diagnostics["coefficients"]["0->1"] == pytest.approx(0.8, abs=0.1)

    def test_two_variable_repeated_seeds(self):
        hits = 0
        for s in range(20):
            x = generate_linear_scm_data(two_var_scm(), 5000, seed=300 + s)
            out = direct_lingam(x, lg_config())
            hits += out.diagnostics["causal_order"] == [0, 1]
        assert hits >= 18

    def test_five_variable_order_recovery(self):
        clean = 0
        for s in range(20):
            rng = np.random.Generator(np.random.Philox(key=np.uint64(1000 + s)))
            scm = dense_scm(rng)
            x = generate_linear_scm_data(scm, 5000, seed=2000 + s)
            out = direct_lingam(x, lg_config())
            clean += order_violations(scm, out.diagnostics["causal_order"]) == 0
        assert clean >= 18

    def test_order_is_permutation_and_adjacency_respects_it(self):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(7)))
        scm = dense_scm(rng)
        x = generate_linear_scm_data(scm, 3000, seed=8)
        out = direct_lingam(x, lg_config())
        order = out.diagnostics["causal_order"]
        assert sorted(order) == list(range(5))
        position = {v: i for i, v in enumerate(order)}
        assert all(position[a] < position[b] for a, b in out.edges)

    def test_deterministic(self):
        x = generate_linear_scm_data(two_var_scm(), 2000, seed=9)
        runs = [direct_lingam(x, lg_config()) for _ in range(3)]
        assert all(r.edges == runs[0].edges for r in runs)
        assert all(
            r.diagnostics["causal_order"] == runs[0].diagnostics["causal_order"]
            for r in runs
        )


class TestDiagnostics:
    def test_gaussian_noise_flagged_weak(self):
        x = generate_linear_scm_data(two_var_scm("gaussian"), 5000, seed=5)
        out = direct_lingam(x, lg_config())
        assert out.diagnostics.get("identifiability") == "weak"

    def test_uniform_noise_not_flagged(self):
        x = generate_linear_scm_data(two_var_scm(), 5000, seed=5)
        out = direct_lingam(x, lg_config())
        assert "identifiability" not in out.diagnostics

    def test_categorical_input_records_coding(self, asia):
        ds = ancestral_sample(asia, 1000, seed=6)
        out = direct_lingam(ds, lg_config())
        assert "categorical_coding" in out.diagnostics
        assert out.edges is not None

    def test_constant_column_raises(self):
        x = np.column_stack([np.ones(100), np.arange(100, dtype=float)])
        with pytest.raises(SingularError):
            direct_lingam(x, lg_config())

    def test_prune_threshold_drops_weak_edges(self):
        x = generate_linear_scm_data(two_var_scm(), 5000, seed=10)
        out = direct_lingam(x, lg_config(prune_threshold=10.0))
        assert out.edges == frozenset()
