from __future__ import annotations

import numpy as np

from cdharness.bayesnet import ancestral_sample, gold_graph
from cdharness.discovery import AlgoConfig, hill_climb_bic
from cdharness.graph import edge_metrics, validate_acyclic

from conftest import binary_dataset, chain_sample


def hc_config(**kw) -> AlgoConfig:
    return AlgoConfig(algorithm="hillclimb", **kw)


def test_independent_coins_stay_empty():
    rng = np.random.Generator(np.random.Philox(key=np.uint64(1)))
    ds = binary_dataset((0, 1, 2), rng.integers(0, 2, size=(5000, 3)))
    out = hill_climb_bic(ds, hc_config())
    assert out.edges == frozenset()


def test_chain_skeleton_recovered():
    out = hill_climb_bic(chain_sample(20000, seed=2), hc_config())
    skeleton = {frozenset(e) for e in out.edges}
    assert skeleton == {frozenset((0, 1)), frozenset((1, 2))}


def test_empty_data_empty_graph():
    ds = binary_dataset((0, 1), np.zeros((0, 2), dtype=np.int64))
    out = hill_climb_bic(ds, hc_config())
    assert out.edges == frozenset()
    assert out.diagnostics["bic"] == 0.0


def test_learned_bic_never_below_empty(asia):
    for seed in range(5):
        ds = ancestral_sample(asia, 500, seed=seed)
        out = hill_climb_bic(ds, hc_config())
        assert out.diagnostics["bic"] >= out.diagnostics["empty_bic"]


def test_output_is_acyclic(asia):
    ds = ancestral_sample(asia, 2000, seed=3)
    out = hill_climb_bic(ds, hc_config())
    validate_acyclic(sorted(ds.columns), out.edges)


def test_deterministic(asia):
    ds = ancestral_sample(asia, 2000, seed=4)
    runs = [hill_climb_bic(ds, hc_config()) for _ in range(3)]
    assert all(r.edges == runs[0].edges for r in runs)


def test_max_iters_caps_moves():
    out = hill_climb_bic(chain_sample(20000, seed=5), hc_config(max_iters=1))
    assert len(out.edges) == 1
    assert out.diagnostics["iterations"] == 1


def test_asia_skeleton_f1(asia):
    ds = ancestral_sample(asia, 20000, seed=11)
    out = hill_climb_bic(ds, hc_config())
    gold_skel = {frozenset(e) for e in gold_graph(asia).edges}
    learned_skel = {frozenset(e) for e in out.edges}
    assert edge_metrics(gold_skel, learned_skel).f1 >= 0.70
