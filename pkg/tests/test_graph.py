from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdharness.errors import CycleError, SelfLoopError, UnknownNodeError
from cdharness.graph import (
    Dag,
    Pdag,
    edge_metrics,
    marginalize,
    pdag_to_directed,
    render_edge_list,
    topological_order,
    validate_acyclic,
)

from oracles import brute_marginalize, random_dag


class TestValidateAcyclic:
    def test_two_node_chain_is_valid(self):
        dag = validate_acyclic([0, 1], [(0, 1)])
        assert dag.edges == frozenset({(0, 1)})

    def test_two_cycle_rejected_with_witness(self):
        with pytest.raises(CycleError) as exc:
            validate_acyclic([0, 1], [(0, 1), (1, 0)])
        cycle = exc.value.cycle
        assert cycle[0] == cycle[-1] and set(cycle) == {0, 1}

    def test_self_loop_rejected(self):
        with pytest.raises(SelfLoopError):
            validate_acyclic([0], [(0, 0)])

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(UnknownNodeError):
            validate_acyclic([0, 1], [(0, 2)])

    def test_longer_cycle_witness_is_closed(self):
        with pytest.raises(CycleError) as exc:
            validate_acyclic([0, 1, 2, 3], [(0, 1), (1, 2), (2, 0), (3, 0)])
        cycle = exc.value.cycle
        assert cycle[0] == cycle[-1]
        assert set(cycle) <= {0, 1, 2}


class TestTopologicalOrder:
    def test_diamond_unique_under_id_tiebreak(self):
        dag = validate_acyclic([0, 1, 2, 3], [(0, 1), (0, 2), (1, 3), (2, 3)])
        assert topological_order(dag) == [0, 1, 2, 3]

    def test_edgeless_is_id_order(self):
        dag = validate_acyclic([2, 0, 1], [])
        assert topological_order(dag) == [0, 1, 2]

    def test_reverse_chain_forced_by_edges(self):
        dag = validate_acyclic([0, 1, 2], [(2, 1), (1, 0)])
        assert topological_order(dag) == [2, 1, 0]

    def test_deterministic_across_calls(self):
        dag = validate_acyclic(range(8), [(0, 5), (3, 2), (6, 1)])
        first = topological_order(dag)
        assert all(topological_order(dag) == first for _ in range(5))


class TestMarginalize:
    def test_chain_collapse(self):
        dag = validate_acyclic([0, 1, 2], [(0, 1), (1, 2)])
        assert marginalize(dag, {1}).edges == frozenset({(0, 2)})

    def test_empty_omission_is_identity(self):
        dag = validate_acyclic([0, 1, 2], [(0, 1), (1, 2)])
        out = marginalize(dag, set())
        assert out.nodes == dag.nodes and out.edges == dag.edges

    def test_collider_leaves_no_edge(self):
        dag = validate_acyclic([0, 1, 2], [(0, 1), (2, 1)])
        out = marginalize(dag, {1})
        assert out.edges == frozenset()
        assert set(out.nodes) == {0, 2}

    def test_diamond_collapses_to_single_edge(self):
        dag = validate_acyclic([0, 1, 2, 3], [(0, 1), (0, 2), (1, 3), (2, 3)])
        assert marginalize(dag, {1, 2}).edges == frozenset({(0, 3)})

    def test_unknown_omitted_node_rejected(self):
        dag = validate_acyclic([0, 1], [(0, 1)])
        with pytest.raises(UnknownNodeError):
            marginalize(dag, {7})

    def test_matches_path_enumeration_oracle(self):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(99)))
        for _ in range(300):
            n = int(rng.integers(2, 9))
            nodes, edges = random_dag(rng, n)
            dag = validate_acyclic(nodes, edges)
            k = int(rng.integers(0, n))
            omitted = set(int(v) for v in rng.choice(n, size=k, replace=False))
            expected = brute_marginalize(nodes, edges, omitted)
            assert marginalize(dag, omitted).edges == frozenset(expected)

    @settings(deadline=None, max_examples=100)
    @given(st.data())
    def test_sequential_equals_joint_omission(self, data):
        seed = data.draw(st.integers(0, 2**32 - 1))
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        n = data.draw(st.integers(2, 10))
        nodes, edges = random_dag(rng, n)
        dag = validate_acyclic(nodes, edges)
        subset = data.draw(st.sets(st.integers(0, n - 1), max_size=n - 1))
        rest = [v for v in nodes if v not in subset]
        s2 = set(data.draw(st.sets(st.sampled_from(rest), max_size=len(rest))) if rest else set())
        joint = marginalize(dag, subset | s2)
        sequential = marginalize(marginalize(dag, subset), s2)
        assert sequential.edges == joint.edges
        assert set(sequential.nodes) == set(joint.nodes)


class TestEdgeMetrics:
    def test_hand_counted_half(self):
        m = edge_metrics({(0, 1), (1, 2)}, {(0, 1), (2, 1)})
        assert (m.tp, m.fp, m.fn_) == (1, 1, 1)
        assert m.precision == m.recall == m.f1 == 0.5

    def test_perfect_match(self):
        m = edge_metrics({(0, 1), (1, 2)}, {(1, 2), (0, 1)})
        assert m.f1 == 1.0

    def test_empty_prediction_defined_zero(self):
        m = edge_metrics({(0, 1)}, set())
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)

    def test_direction_sensitive(self):
        m = edge_metrics({(0, 1)}, {(1, 0)})
        assert m.tp == 0 and m.fp == 1 and m.fn_ == 1

    def test_relabeling_symmetry(self):
        gold = {(0, 1), (1, 2), (0, 2)}
        pred = {(0, 1), (2, 1)}
        relabel = {0: 10, 1: 11, 2: 12}.get
        m1 = edge_metrics(gold, pred)
        m2 = edge_metrics(
            {(relabel(a), relabel(b)) for a, b in gold},
            {(relabel(a), relabel(b)) for a, b in pred},
        )
        assert (m1.tp, m1.fp, m1.fn_, m1.f1) == (m2.tp, m2.fp, m2.fn_, m2.f1)

    def test_f1_zero_iff_no_true_positive(self):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(5)))
        for _ in range(200):
            gold = {(int(a), int(b)) for a, b in rng.integers(0, 5, size=(4, 2)) if a != b}
            pred = {(int(a), int(b)) for a, b in rng.integers(0, 5, size=(4, 2)) if a != b}
            m = edge_metrics(gold, pred)
            assert (m.f1 == 0) == (m.tp == 0)
            assert (m.f1 == 1.0) == (gold == pred and len(gold) > 0)


class TestPdag:
    def test_drop_undirected(self):
        pdag = Pdag(nodes=(0, 1, 2), directed=frozenset({(0, 2)}),
                    undirected=frozenset({frozenset((0, 1))}))
        assert pdag_to_directed(pdag, "drop-undirected") == frozenset({(0, 2)})

    def test_both_directions(self):
        pdag = Pdag(nodes=(0, 1, 2), directed=frozenset({(0, 2)}),
                    undirected=frozenset({frozenset((0, 1))}))
        assert pdag_to_directed(pdag, "both-directions") == frozenset({(0, 2), (0, 1), (1, 0)})

    def test_empty(self):
        assert pdag_to_directed(Pdag(nodes=(0, 1))) == frozenset()

    def test_pair_cannot_be_directed_and_undirected(self):
        with pytest.raises(ValueError):
            Pdag(nodes=(0, 1), directed=frozenset({(0, 1)}),
                 undirected=frozenset({frozenset((0, 1))}))


def test_render_edge_list_format():
    text = render_edge_list({(0, 1), (2, 0)}, {0: "b", 1: "c", 2: "a"})
    assert text == "a -> b\nb -> c"


def test_render_empty_edge_list():
    assert render_edge_list(set(), {}) == ""


def test_dag_is_immutable():
    dag = validate_acyclic([0, 1], [(0, 1)])
    assert isinstance(dag, Dag)
    with pytest.raises(AttributeError):
        dag.nodes = (1,)
