"""Algorithm configuration, outputs, suite orchestration, prompt formatting."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping

from ..bayesnet import Dataset
from ..graph import Edge, Pdag, VarId

ALGORITHMS = ("pc", "hillclimb", "direct_lingam")


@dataclass(frozen=True)
class AlgoConfig:
    algorithm: str
    alpha: float = 0.05
    max_cond_size: int = 3
    max_iters: int = 200
    prune_threshold: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")
        if self.prune_threshold < 0:
            raise ValueError("prune_threshold must be >= 0")


@dataclass(frozen=True)
class AlgoOutput:
    algorithm: str
    edges: frozenset[Edge]
    undirected: frozenset[frozenset[VarId]] = field(default_factory=frozenset)
    diagnostics: dict = field(default_factory=dict)

    def as_pdag(self, nodes) -> Pdag:
        """The output as a validated partially directed graph."""
        return Pdag(nodes=tuple(nodes), directed=self.edges, undirected=self.undirected)


@dataclass(frozen=True)
class AlgoFailure:
    algorithm: str
    error: str


@dataclass(frozen=True)
class SuiteResult:
    outputs: list[AlgoOutput]
    failures: list[AlgoFailure]


def run_suite(dataset: Dataset, configs: list[AlgoConfig]) -> SuiteResult:
    """Run each configured algorithm on the same dataset.

    A failing algorithm becomes a failure record; the rest of the suite
    still runs. Output order follows config order.
    """
    from .hillclimb import hill_climb_bic
    from .lingam import direct_lingam
    from .pc import pc

    if not configs:
        raise ValueError("run_suite needs at least one AlgoConfig")
    runners = {"pc": pc, "hillclimb": hill_climb_bic, "direct_lingam": direct_lingam}
    outputs: list[AlgoOutput] = []
    failures: list[AlgoFailure] = []
    for config in configs:
        start = time.perf_counter()
        try:
            out = runners[config.algorithm](dataset, config)
        except Exception as exc:
            failures.append(AlgoFailure(algorithm=config.algorithm, error=f"{type(exc).__name__}: {exc}"))
            continue
        out.diagnostics.setdefault("runtime_s", round(time.perf_counter() - start, 6))
        outputs.append(out)
    return SuiteResult(outputs=outputs, failures=failures)


def format_algo_output(outputs: list[AlgoOutput], name_map: Mapping[VarId, str]) -> str:
    """Render algorithm outputs as the prompt-visible text block.

    One ``Method: <name>`` header per algorithm followed by one edge per
    line (``A -> B`` directed, ``A -- B`` undirected), sorted by display
    name. Diagnostics, scores and runtimes are deliberately left out. The
    output is byte-stable given identical inputs.
    """
    blocks: list[str] = []
    for out in outputs:
        lines = [f"Method: {out.algorithm}"]
        directed = sorted((name_map[a], name_map[b]) for a, b in out.edges)
        undirected = sorted(tuple(sorted((name_map[a], name_map[b]))) for a, b in
                            (tuple(pair) for pair in out.undirected))
        for a, b in directed:
            lines.append(f"{a} -> {b}")
        for a, b in undirected:
            lines.append(f"{a} -- {b}")
        if not directed and not undirected:
            lines.append("(no edges)")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)
