"""The PC algorithm: G-square skeleton search, v-structures, Meek closure.

Deterministic by construction: node pairs, conditioning subsets, and
orientation sweeps are all enumerated in ascending VarId order.
"""

from __future__ import annotations

from itertools import combinations

from ..bayesnet import Dataset
from ..citests import g_square
from ..errors import CdharnessError
from ..graph import VarId
from .suite import AlgoConfig, AlgoOutput


def pc(dataset: Dataset, config: AlgoConfig) -> AlgoOutput:
    """Run PC on a categorical dataset and return its partially directed graph.

    Skeleton phase: starting from the complete graph, for growing
    conditioning sizes each still-adjacent pair is tested against every
    eligible neighbor subset; the edge is dropped (and the separating set
    recorded) at the first p-value above ``config.alpha``. A test with too
    little data for its conditioning size counts as independence.
    Orientation: v-structures from the recorded separating sets, then Meek
    rules applied to closure.
    """
    if len(dataset.columns) < 2:
        raise ValueError("pc needs at least two columns")
    nodes = sorted(dataset.columns)
    adj: dict[VarId, set[VarId]] = {v: set(nodes) - {v} for v in nodes}
    sepset: dict[tuple[VarId, VarId], frozenset[VarId]] = {}
    diagnostics: dict = {"tests": 0, "skipped_tests": 0, "insufficient_tests": 0}

    for level in range(config.max_cond_size + 1):
        if not _any_testable_pair(adj, level):
            break
        for x, y in combinations(nodes, 2):
            if y not in adj[x]:
                continue
            _try_separate(dataset, config, adj, sepset, diagnostics, x, y, level)
    skeleton = {frozenset((x, y)) for x in adj for y in adj[x]}

    directed, undirected = _orient(nodes, adj, sepset, diagnostics)
    diagnostics["skeleton_size"] = len(skeleton)
    return AlgoOutput(
        algorithm="pc",
        edges=frozenset(directed),
        undirected=frozenset(undirected),
        diagnostics=diagnostics,
    )


def _any_testable_pair(adj: dict[VarId, set[VarId]], level: int) -> bool:
    return any(
        len(adj[x] - {y}) >= level or len(adj[y] - {x}) >= level
        for x in adj
        for y in adj[x]
        if x < y
    )


def _try_separate(dataset, config, adj, sepset, diagnostics, x: VarId, y: VarId, level: int) -> bool:
    """Search both neighbor pools for a separating set of this size."""
    for pool_owner, other in ((x, y), (y, x)):
        if pool_owner == y and level == 0:
            continue  # the empty subset was already tested from x's side
        pool = sorted(adj[pool_owner] - {other})
        if len(pool) < level:
            continue
        for subset in combinations(pool, level):
            diagnostics["tests"] += 1
            try:
                result = g_square(dataset, x, y, subset)
            except CdharnessError:
                diagnostics["skipped_tests"] += 1
                continue
            if result.insufficient_data:
                diagnostics["insufficient_tests"] += 1
            if result.insufficient_data or result.p_value > config.alpha:
                adj[x].discard(y)
                adj[y].discard(x)
                sepset[(x, y)] = sepset[(y, x)] = frozenset(subset)
                return True
    return False


def _orient(nodes, adj, sepset, diagnostics):
    """Collider orientation followed by Meek rules R1-R4.

    ``amat[a][b]`` means the mark a -> b is present; an undirected edge
    carries both marks.
    """
    amat: dict[VarId, dict[VarId, bool]] = {a: {b: False for b in nodes} for a in nodes}
    for a in nodes:
        for b in adj[a]:
            amat[a][b] = True

    conflicts = 0
    for z in nodes:
        for x, y in combinations(sorted(adj[z]), 2):
            if y in adj[x]:
                continue
            pair_sepset = sepset.get((x, y), frozenset())
            if z in pair_sepset:
                continue
            # x -> z <- y; keep a previously fixed opposite orientation.
            for tail in (x, y):
                if amat[tail][z] and not amat[z][tail]:
                    continue
                if amat[z][tail] and not amat[tail][z]:
                    conflicts += 1
                    continue
                amat[z][tail] = False
    diagnostics["collider_conflicts"] = conflicts

    changed = True
    while changed:
        changed = False
        for a, b in _undirected_pairs(nodes, amat):
            if not (amat[a][b] and amat[b][a]):
                continue  # oriented earlier in this sweep
            if _meek_r1(nodes, amat, a, b) or _meek_r2(nodes, amat, a, b) \
                    or _meek_r3(nodes, amat, a, b) or _meek_r4(nodes, amat, a, b):
                amat[b][a] = False
                changed = True

    directed = {(a, b) for a in nodes for b in nodes if amat[a][b] and not amat[b][a]}
    undirected = {frozenset((a, b)) for a in nodes for b in nodes if a < b and amat[a][b] and amat[b][a]}
    return directed, undirected


def _undirected_pairs(nodes, amat):
    # Ordered pairs: each undirected edge is visited in both directions so
    # every rule only ever needs to conclude a -> b.
    return [(a, b) for a in nodes for b in nodes if a != b and amat[a][b] and amat[b][a]]


def _adjacent(amat, a, b) -> bool:
    return amat[a][b] or amat[b][a]


def _meek_r1(nodes, amat, a, b) -> bool:
    # c -> a, a - b, c and b nonadjacent  =>  a -> b
    return any(
        amat[c][a] and not amat[a][c] and not _adjacent(amat, c, b)
        for c in nodes
        if c not in (a, b)
    )


def _meek_r2(nodes, amat, a, b) -> bool:
    # a -> c -> b with a - b  =>  a -> b
    return any(
        amat[a][c] and not amat[c][a] and amat[c][b] and not amat[b][c]
        for c in nodes
        if c not in (a, b)
    )


def _meek_r3(nodes, amat, a, b) -> bool:
    # a - c -> b, a - d -> b, c and d nonadjacent  =>  a -> b
    candidates = [
        c
        for c in nodes
        if c not in (a, b)
        and amat[a][c] and amat[c][a]
        and amat[c][b] and not amat[b][c]
    ]
    return any(
        not _adjacent(amat, c, d) for c, d in combinations(candidates, 2)
    )


def _meek_r4(nodes, amat, a, b) -> bool:
    # a adjacent to c, c -> d -> b, c and b nonadjacent  =>  a -> b
    for c in nodes:
        if c in (a, b) or not _adjacent(amat, a, c) or _adjacent(amat, c, b):
            continue
        for d in nodes:
            if d in (a, b, c):
                continue
            if amat[c][d] and not amat[d][c] and amat[d][b] and not amat[b][d]:
                return True
    return False
