"""Greedy BIC hill-climbing over DAGs for categorical data.

The score decomposes per node: multinomial log-likelihood of the child
given its parent configuration minus (ln N / 2) times the free-parameter
count, with parent-configuration counts taken from the declared state
spaces. Search starts from the empty graph and applies the single best
add/delete/reverse move while it strictly improves the total score.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from ..bayesnet import Dataset
from ..graph import VarId
from .suite import AlgoConfig, AlgoOutput

IMPROVEMENT_EPS = 1e-9


def hill_climb_bic(dataset: Dataset, config: AlgoConfig) -> AlgoOutput:
    if len(dataset.columns) < 1:
        raise ValueError("hill_climb_bic needs at least one column")
    search = _Search(dataset)
    iters = 0
    while iters < config.max_iters:
        move = search.best_move()
        if move is None or move.delta <= IMPROVEMENT_EPS:
            break
        search.apply(move)
        iters += 1
    edges = frozenset(
        (a, b) for a in search.nodes for b in search.parents if a in search.parents[b]
    )
    return AlgoOutput(
        algorithm="hillclimb",
        edges=edges,
        diagnostics={
            "iterations": iters,
            "bic": search.total_score(),
            "empty_bic": search.empty_score,
            "local_scores_evaluated": search.evaluations,
        },
    )


class _Move:
    __slots__ = ("kind", "a", "b", "delta")

    def __init__(self, kind: str, a: VarId, b: VarId, delta: float):
        self.kind = kind
        self.a = a
        self.b = b
        self.delta = delta


class _Search:
    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.nodes = sorted(dataset.columns)
        self.pos = {v: dataset.column_pos(v) for v in self.nodes}
        self.parents: dict[VarId, frozenset[VarId]] = {v: frozenset() for v in self.nodes}
        self._cache: dict[tuple[VarId, frozenset[VarId]], float] = {}
        self.evaluations = 0
        self.empty_score = sum(self.local_score(v, frozenset()) for v in self.nodes)

    def local_score(self, child: VarId, parents: frozenset[VarId]) -> float:
        key = (child, parents)
        if key in self._cache:
            return self._cache[key]
        self.evaluations += 1
        ds = self.dataset
        n = ds.n_rows
        jc = self.pos[child]
        r = ds.cardinalities[jc]
        q = 1
        idx = np.zeros(n, dtype=np.int64)
        for p in sorted(parents):
            jp = self.pos[p]
            k = ds.cardinalities[jp]
            idx = idx * k + ds.matrix[:, jp]
            q *= k
        score = 0.0
        if n > 0:
            flat = idx * r + ds.matrix[:, jc]
            counts = np.bincount(flat, minlength=q * r).reshape(q, r).astype(float)
            row_totals = counts.sum(axis=1, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                ll = counts * np.log(np.where(counts > 0, counts / row_totals, 1.0))
            score = float(ll.sum()) - 0.5 * math.log(n) * q * (r - 1)
        self._cache[key] = score
        return score

    def total_score(self) -> float:
        return sum(self.local_score(v, self.parents[v]) for v in self.nodes)

    def _creates_cycle(self, tail: VarId, head: VarId) -> bool:
        # Would tail -> head close a cycle, i.e. is tail reachable from head?
        stack = [head]
        seen = set()
        while stack:
            v = stack.pop()
            if v == tail:
                return True
            if v in seen:
                continue
            seen.add(v)
            stack.extend(c for c in self.nodes if v in self.parents[c])
        return False

    def best_move(self) -> _Move | None:
        best: _Move | None = None
        for a, b in permutations(self.nodes, 2):
            has_edge = a in self.parents[b]
            for kind in ("add", "delete", "reverse"):
                delta = None
                if kind == "add" and not has_edge:
                    if not self._creates_cycle(a, b):
                        delta = self.local_score(b, self.parents[b] | {a}) - self.local_score(
                            b, self.parents[b]
                        )
                elif kind == "delete" and has_edge:
                    delta = self.local_score(b, self.parents[b] - {a}) - self.local_score(
                        b, self.parents[b]
                    )
                elif kind == "reverse" and has_edge:
                    self.parents[b] = self.parents[b] - {a}
                    cycle = self._creates_cycle(b, a)
                    self.parents[b] = self.parents[b] | {a}
                    if not cycle:
                        delta = (
                            self.local_score(b, self.parents[b] - {a})
                            - self.local_score(b, self.parents[b])
                            + self.local_score(a, self.parents[a] | {b})
                            - self.local_score(a, self.parents[a])
                        )
                if delta is not None and (best is None or delta > best.delta):
                    best = _Move(kind, a, b, delta)
        return best

    def apply(self, move: _Move) -> None:
        if move.kind == "add":
            self.parents[move.b] = self.parents[move.b] | {move.a}
        elif move.kind == "delete":
            self.parents[move.b] = self.parents[move.b] - {move.a}
        else:
            self.parents[move.b] = self.parents[move.b] - {move.a}
            self.parents[move.a] = self.parents[move.a] | {move.b}
