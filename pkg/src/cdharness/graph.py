"""Directed acyclic graphs over stable integer variable ids.

Variables are identified by opaque integer ids that survive renaming and
column reordering; display names live elsewhere. Edges are ordered pairs
``(tail, head)``. Everything here is immutable and pure.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import CycleError, SelfLoopError, UnknownNodeError

VarId = int
Edge = tuple[VarId, VarId]


@dataclass(frozen=True)
class Dag:
    """A validated directed acyclic graph. Construct via :func:`validate_acyclic`."""

    nodes: tuple[VarId, ...]
    edges: frozenset[Edge]

    def parents(self, v: VarId) -> set[VarId]:
        return {a for a, b in self.edges if b == v}

    def children(self, v: VarId) -> set[VarId]:
        return {b for a, b in self.edges if a == v}


@dataclass(frozen=True)
class Pdag:
    """A partially directed graph: PC's natural output before orientation ends.

    ``directed`` holds ordered pairs, ``undirected`` holds frozensets of size
    two. The same pair never appears in both.
    """

    nodes: tuple[VarId, ...]
    directed: frozenset[Edge] = field(default_factory=frozenset)
    undirected: frozenset[frozenset[VarId]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for a, b in self.directed:
            if a == b:
                raise SelfLoopError(f"self-loop on {a}")
            if frozenset((a, b)) in self.undirected:
                raise ValueError(f"pair {a},{b} is both directed and undirected")
        for pair in self.undirected:
            if len(pair) != 2:
                raise SelfLoopError(f"undirected self-loop on {set(pair)}")


@dataclass(frozen=True)
class EdgeMetrics:
    """Direction-sensitive edge counts and the derived precision/recall/F1."""

    tp: int
    fp: int
    fn_: int
    precision: float
    recall: float
    f1: float


def validate_acyclic(nodes: Iterable[VarId], edges: Iterable[Edge]) -> Dag:
    """Build a :class:`Dag`, rejecting self-loops, unknown endpoints and cycles.

    Raises SelfLoopError, UnknownNodeError, or CycleError (with one witness
    cycle) respectively.
    """
    node_tuple = tuple(dict.fromkeys(nodes))
    node_set = set(node_tuple)
    edge_set = frozenset(edges)
    for a, b in edge_set:
        if a == b:
            raise SelfLoopError(f"self-loop on {a}")
        if a not in node_set or b not in node_set:
            raise UnknownNodeError(f"edge {a}->{b} has an endpoint outside the node set")
    dag = Dag(nodes=node_tuple, edges=edge_set)
    order = _kahn(node_tuple, edge_set)
    if len(order) < len(node_tuple):
        raise CycleError(_witness_cycle(node_set - set(order), edge_set))
    return dag


def topological_order(dag: Dag) -> list[VarId]:
    """Topological order of ``dag``, ties broken by ascending VarId."""
    return _kahn(dag.nodes, dag.edges)


def _kahn(nodes: tuple[VarId, ...], edges: frozenset[Edge]) -> list[VarId]:
    indeg = {v: 0 for v in nodes}
    children: dict[VarId, list[VarId]] = {v: [] for v in nodes}
    for a, b in edges:
        indeg[b] += 1
        children[a].append(b)
    ready = [v for v in nodes if indeg[v] == 0]
    heapq.heapify(ready)
    order: list[VarId] = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    return order


def _witness_cycle(candidates: set[VarId], edges: frozenset[Edge]) -> list[VarId]:
    # Walk successors inside the non-sorted remainder until a node repeats.
    children: dict[VarId, list[VarId]] = {}
    for a, b in edges:
        if a in candidates and b in candidates:
            children.setdefault(a, []).append(b)
    start = min(candidates)
    path, seen = [start], {start: 0}
    while True:
        nxt = min(c for c in children[path[-1]])
        if nxt in seen:
            return path[seen[nxt]:] + [nxt]
        seen[nxt] = len(path)
        path.append(nxt)


def marginalize(dag: Dag, omitted: Iterable[VarId]) -> Dag:
    """Project out ``omitted``: keep edge u->v iff a directed path u..v runs
    entirely through omitted intermediates.

    This is the directed part of the latent projection; the result is again
    acyclic because directed paths in a DAG cannot close a cycle among the
    retained nodes.
    """
    omit = set(omitted)
    unknown = omit - set(dag.nodes)
    if unknown:
        raise UnknownNodeError(f"cannot omit undeclared nodes {sorted(unknown)}")
    kept = tuple(v for v in dag.nodes if v not in omit)
    children: dict[VarId, list[VarId]] = {v: [] for v in dag.nodes}
    for a, b in dag.edges:
        children[a].append(b)
    new_edges: set[Edge] = set()
    for u in kept:
        # DFS from u through omitted nodes only; every retained node reached
        # becomes a direct child of u.
        stack = list(children[u])
        visited: set[VarId] = set()
        while stack:
            w = stack.pop()
            if w in visited:
                continue
            visited.add(w)
            if w in omit:
                stack.extend(children[w])
            elif w != u:
                new_edges.add((u, w))
    return Dag(nodes=kept, edges=frozenset(new_edges))


def edge_metrics(gold: Iterable, pred: Iterable) -> EdgeMetrics:
    """Precision/recall/F1 of a predicted edge set against gold.

    Direction-sensitive; edges are compared by exact identity. Ratios with an
    empty denominator are defined as zero.
    """
    gold_set, pred_set = set(gold), set(pred)
    tp = len(pred_set & gold_set)
    fp = len(pred_set - gold_set)
    fn = len(gold_set - pred_set)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EdgeMetrics(tp=tp, fp=fp, fn_=fn, precision=precision, recall=recall, f1=f1)


def pdag_to_directed(pdag: Pdag, policy: str = "drop-undirected") -> frozenset[Edge]:
    """Flatten a Pdag to directed edges.

    ``drop-undirected`` keeps only the directed set (conservative default);
    ``both-directions`` expands each undirected pair into both arrows.
    """
    if policy == "drop-undirected":
        return frozenset(pdag.directed)
    if policy == "both-directions":
        out = set(pdag.directed)
        for pair in pdag.undirected:
            a, b = sorted(pair)
            out.add((a, b))
            out.add((b, a))
        return frozenset(out)
    raise ValueError(f"unknown policy {policy!r}")


def render_edge_list(edges: Iterable[Edge], name_map: Mapping[VarId, str]) -> str:
    """One ``NAME -> NAME`` line per edge, sorted by (tail name, head name)."""
    lines = sorted(f"{name_map[a]} -> {name_map[b]}" for a, b in edges)
    return "\n".join(lines)
