"""Discrete Bayesian networks: BIF ingestion, ground truth, forward sampling.

The BIF subset understood here covers the benchmark networks shipped under
``cdharness/data/networks``: ``network``/``variable``/``probability`` blocks,
discrete variables only, one CPT per variable, rows keyed by parent-state
labels (or a single ``table`` row for parentless variables).

Sampling is deterministic and thread-count independent: row ``i`` of a run
with seed ``s`` draws its uniforms from a Philox generator keyed by
``(s, i)``, one uniform per variable, consumed in topological order. Any
partition of rows across workers therefore reproduces the same matrix.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

import numpy as np

from .errors import (
    ParseError,
    UnknownStateLabelError,
    ValidationError,
)
from .graph import Dag, VarId, topological_order, validate_acyclic

PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table for one child variable.

    ``table`` has one row per parent-state combination, row-major over the
    parent order (first parent varies slowest), and one column per child
    state.
    """

    child: VarId
    parents: tuple[VarId, ...]
    table: np.ndarray

    def row_index(self, parent_states: tuple[int, ...], cards: tuple[int, ...]) -> int:
        idx = 0
        for state, card in zip(parent_states, cards):
            idx = idx * card + state
        return idx


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...]

    @property
    def cardinality(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class DiscreteBayesNet:
    name: str
    variables: dict[VarId, Variable]
    cpts: dict[VarId, Cpt]
    graph: Dag

    @property
    def var_by_name(self) -> dict[str, VarId]:
        return {v.name: vid for vid, v in self.variables.items()}

    def name_map(self) -> dict[VarId, str]:
        return {vid: v.name for vid, v in self.variables.items()}


@dataclass(frozen=True)
class Dataset:
    """A sampled observation matrix of state indices.

    ``labels[j]`` is the ordered state-label list for column ``j``; a cell
    value is an index into it. The matrix is frozen after construction.
    """

    columns: tuple[VarId, ...]
    labels: tuple[tuple[str, ...], ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if len(set(self.columns)) != len(self.columns):
            raise ValidationError("duplicate column ids in dataset")
        m = np.asarray(self.matrix, dtype=np.int64)
        if m.ndim != 2 or m.shape[1] != len(self.columns):
            raise ValidationError("matrix shape does not match column list")
        for j, labs in enumerate(self.labels):
            if m.shape[0] and m[:, j].max(initial=0) >= len(labs):
                raise ValidationError(f"cell out of range for column {self.columns[j]}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(labs) for labs in self.labels)

    def column_pos(self, var: VarId) -> int:
        return self.columns.index(var)


# ---------------------------------------------------------------------------
# BIF parsing


class _Tokens:
    """Whitespace-split tokens annotated with line/column for error reports."""

    _TOKEN_RE = re.compile(r"[A-Za-z0-9_.\-+]+|[(){}\[\]|,;]")

    def __init__(self, text: str):
        self.items: list[tuple[str, int, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("//")[0]
            for m in self._TOKEN_RE.finditer(line):
                self.items.append((m.group(0), lineno, m.start() + 1))
        self.pos = 0

    def peek(self) -> str | None:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self.items):
            last_line = self.items[-1][1] if self.items else 1
            raise ParseError("unexpected end of input", last_line)
        tok, line, col = self.items[self.pos]
        if expect is not None and tok != expect:
            raise ParseError(f"expected {expect!r}, found {tok!r}", line, col)
        self.pos += 1
        return tok

    def here(self) -> tuple[int, int]:
        if self.pos < len(self.items):
            _, line, col = self.items[self.pos]
            return line, col
        return (self.items[-1][1] if self.items else 1), 1

    def next_float(self) -> float:
        line, col = self.here()
        tok = self.next()
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected a number, found {tok!r}", line, col) from None


def parse_bif(text: str, name: str = "network") -> DiscreteBayesNet:
    """Parse BIF text into a validated :class:`DiscreteBayesNet`.

    Variable ids are assigned in order of first appearance. Raises
    ParseError for malformed syntax and ValidationError for semantic
    problems (unnormalized rows, missing or duplicate CPTs, undeclared
    references).
    """
    toks = _Tokens(text)
    variables: dict[VarId, Variable] = {}
    by_name: dict[str, VarId] = {}
    raw_cpts: list[tuple[str, list[str], dict[tuple[str, ...], list[float]], list[float] | None, int]] = []
    net_name = name

    while toks.peek() is not None:
        line, col = toks.here()
        head = toks.next()
        if head == "network":
            net_name = toks.next()
            _skip_block(toks)
        elif head == "variable":
            var_name = toks.next()
            if var_name in by_name:
                raise ValidationError(f"variable {var_name!r} declared twice")
            states = _parse_variable_block(toks, var_name)
            vid = len(variables)
            variables[vid] = Variable(name=var_name, states=states)
            by_name[var_name] = vid
        elif head == "probability":
            raw_cpts.append(_parse_probability_block(toks))
        else:
            raise ParseError(f"unexpected token {head!r}", line, col)

    return _assemble_net(net_name, variables, by_name, raw_cpts)


def _skip_block(toks: _Tokens) -> None:
    toks.next("{")
    depth = 1
    while depth:
        tok = toks.next()
        if tok == "{":
            depth += 1
        elif tok == "}":
            depth -= 1


def _parse_variable_block(toks: _Tokens, var_name: str) -> tuple[str, ...]:
    toks.next("{")
    toks.next("type")
    toks.next("discrete")
    toks.next("[")
    line, col = toks.here()
    card = int(toks.next())
    toks.next("]")
    toks.next("{")
    states: list[str] = []
    while toks.peek() != "}":
        tok = toks.next()
        if tok != ",":
            states.append(tok)
    toks.next("}")
    if toks.peek() == ";":
        toks.next()
    toks.next("}")
    if len(states) != card:
        raise ParseError(
            f"variable {var_name!r} declares {card} states but lists {len(states)}", line, col
        )
    return tuple(states)


def _parse_probability_block(toks: _Tokens):
    line, _ = toks.here()
    toks.next("(")
    child = toks.next()
    parents: list[str] = []
    if toks.peek() == "|":
        toks.next()
        while toks.peek() != ")":
            tok = toks.next()
            if tok != ",":
                parents.append(tok)
    toks.next(")")
    toks.next("{")
    rows: dict[tuple[str, ...], list[float]] = {}
    table_row: list[float] | None = None
    while toks.peek() != "}":
        if toks.peek() == "table":
            toks.next()
            values: list[float] = []
            while toks.peek() not in (";", "}"):
                if toks.peek() == ",":
                    toks.next()
                    continue
                values.append(toks.next_float())
            if toks.peek() == ";":
                toks.next()
            table_row = values
        elif toks.peek() == "(":
            toks.next()
            key: list[str] = []
            while toks.peek() != ")":
                tok = toks.next()
                if tok != ",":
                    key.append(tok)
            toks.next(")")
            values = []
            while toks.peek() not in (";", "}"):
                if toks.peek() == ",":
                    toks.next()
                    continue
                values.append(toks.next_float())
            if toks.peek() == ";":
                toks.next()
            rows[tuple(key)] = values
        else:
            l, c = toks.here()
            raise ParseError(f"unexpected token {toks.peek()!r} in probability block", l, c)
    toks.next("}")
    return child, parents, rows, table_row, line


def _assemble_net(
    net_name: str,
    variables: dict[VarId, Variable],
    by_name: dict[str, VarId],
    raw_cpts,
) -> DiscreteBayesNet:
    cpts: dict[VarId, Cpt] = {}
    for child_name, parent_names, rows, table_row, line in raw_cpts:
        if child_name not in by_name:
            raise ValidationError(f"probability block for undeclared variable {child_name!r}")
        child = by_name[child_name]
        if child in cpts:
            raise ValidationError(f"duplicate probability block for {child_name!r}")
        try:
            parents = tuple(by_name[p] for p in parent_names)
        except KeyError as exc:
            raise ValidationError(f"undeclared parent {exc.args[0]!r} of {child_name!r}") from None
        cards = tuple(variables[p].cardinality for p in parents)
        n_rows = int(np.prod(cards)) if parents else 1
        child_card = variables[child].cardinality
        table = np.full((n_rows, child_card), np.nan)
        if parents:
            if table_row is not None:
                raise ValidationError(f"{child_name!r} has parents but uses a table row")
            state_index = {
                p: {s: i for i, s in enumerate(variables[p].states)} for p in parents
            }
            for key, values in rows.items():
                if len(key) != len(parents):
                    raise ValidationError(f"row key arity mismatch for {child_name!r}")
                try:
                    idx_states = tuple(state_index[p][k] for p, k in zip(parents, key))
                except KeyError:
                    raise ValidationError(
                        f"unknown parent state {key} in CPT of {child_name!r}"
                    ) from None
                idx = 0
                for state, card in zip(idx_states, cards):
                    idx = idx * card + state
                table[idx] = _check_row(values, child_card, child_name)
        else:
            if table_row is None and len(rows) != 1:
                raise ValidationError(f"parentless {child_name!r} needs a table row")
            values = table_row if table_row is not None else next(iter(rows.values()))
            table[0] = _check_row(values, child_card, child_name)
        if np.isnan(table).any():
            raise ValidationError(f"CPT of {child_name!r} is missing parent-state rows")
        table.flags.writeable = False
        cpts[child] = Cpt(child=child, parents=parents, table=table)

    missing = set(variables) - set(cpts)
    if missing:
        names = ", ".join(variables[v].name for v in sorted(missing))
        raise ValidationError(f"missing probability blocks for: {names}")

    edges = {(p, c) for c, cpt in cpts.items() for p in cpt.parents}
    graph = validate_acyclic(tuple(variables), edges)
    return DiscreteBayesNet(name=net_name, variables=variables, cpts=cpts, graph=graph)


def _check_row(values: list[float], card: int, child_name: str) -> list[float]:
    if len(values) != card:
        raise ValidationError(
            f"CPT row of {child_name!r} has {len(values)} entries, expected {card}"
        )
    if any(v < 0 for v in values):
        raise ValidationError(f"negative probability in CPT of {child_name!r}")
    if abs(sum(values) - 1.0) > PROB_SUM_TOL:
        raise ValidationError(
            f"CPT row of {child_name!r} sums to {sum(values):.6g}, expected 1"
        )
    return values


def load_bif(path) -> DiscreteBayesNet:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    import os

    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_bif(text, name=stem)


def builtin_network_names() -> list[str]:
    files = resources.files("cdharness.data.networks")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".bif"))


def load_builtin(name: str) -> DiscreteBayesNet:
    """Load one of the packaged benchmark networks by short name."""
    files = resources.files("cdharness.data.networks")
    target = files / f"{name.lower()}.bif"
    try:
        text = target.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(
            f"unknown builtin network {name!r}; available: {', '.join(builtin_network_names())}"
        ) from None
    return parse_bif(text, name=name.lower())


# ---------------------------------------------------------------------------
# Ground truth and sampling


def gold_graph(net: DiscreteBayesNet) -> Dag:
    """The DAG implied by the CPT parent sets: one edge parent -> child."""
    return net.graph


def _row_uniforms(seed: int, row: int, count: int) -> np.ndarray:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(row)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(count)


def ancestral_sample(net: DiscreteBayesNet, n_rows: int, seed: int) -> Dataset:
    """Draw ``n_rows`` joint samples by forward sampling in topological order.

    Column order of the result is the topological order. Fully determined by
    ``(net, n_rows, seed)``.
    """
    order = topological_order(net.graph)
    d = len(order)
    pos = {v: j for j, v in enumerate(order)}
    labels = tuple(net.variables[v].states for v in order)
    if n_rows == 0:
        matrix = np.zeros((0, d), dtype=np.int64)
        return Dataset(columns=tuple(order), labels=labels, matrix=matrix)

    uniforms = np.empty((n_rows, d))
    for i in range(n_rows):
        uniforms[i] = _row_uniforms(seed, i, d)

    matrix = np.zeros((n_rows, d), dtype=np.int64)
    for j, v in enumerate(order):
        cpt = net.cpts[v]
        cum = np.cumsum(cpt.table, axis=1)
        if cpt.parents:
            cards = [net.variables[p].cardinality for p in cpt.parents]
            row_idx = np.zeros(n_rows, dtype=np.int64)
            for p, card in zip(cpt.parents, cards):
                row_idx = row_idx * card + matrix[:, pos[p]]
        else:
            row_idx = np.zeros(n_rows, dtype=np.int64)
        thresholds = cum[row_idx]
        states = (uniforms[:, j][:, None] >= thresholds).sum(axis=1)
        matrix[:, j] = np.minimum(states, cpt.table.shape[1] - 1)
    return Dataset(columns=tuple(order), labels=labels, matrix=matrix)


# ---------------------------------------------------------------------------
# CSV round-trip


def to_csv(dataset: Dataset, name_map: Mapping[VarId, str]) -> str:
    """Render a dataset as CSV: display-name header, state-label cells."""
    out = io.StringIO()
    out.write(",".join(name_map[v] for v in dataset.columns) + "\n")
    for row in dataset.matrix:
        out.write(",".join(dataset.labels[j][row[j]] for j in range(len(dataset.columns))) + "\n")
    return out.getvalue()


def from_csv(text: str, net: DiscreteBayesNet | None = None) -> tuple[Dataset, dict[VarId, str]]:
    """Read a CSV produced by :func:`to_csv` back into a dataset.

    With ``net``, header names must be network variable names and cells must
    be declared state labels. Without a net, variables get fresh ids in
    header order with state spaces inferred from the observed labels
    (sorted), which is sufficient for running discovery on a bare CSV.

    Returns the dataset and its column-id -> display-name map.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise ValidationError("empty CSV: missing header")
    header = lines[0].split(",")
    if len(set(header)) != len(header):
        raise ValidationError("duplicate column names in CSV header")
    body = [ln.split(",") for ln in lines[1:]]
    for i, cells in enumerate(body, start=2):
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(cells)}", i)

    if net is not None:
        by_name = net.var_by_name
        try:
            columns = tuple(by_name[h] for h in header)
        except KeyError as exc:
            raise ValidationError(f"CSV column {exc.args[0]!r} is not a network variable") from None
        labels = tuple(net.variables[v].states for v in columns)
    else:
        columns = tuple(range(len(header)))
        labels = tuple(
            tuple(sorted({cells[j] for cells in body})) if body else ()
            for j in range(len(header))
        )

    index = [{s: i for i, s in enumerate(labs)} for labs in labels]
    matrix = np.zeros((len(body), len(header)), dtype=np.int64)
    for i, cells in enumerate(body):
        for j, cell in enumerate(cells):
            try:
                matrix[i, j] = index[j][cell]
            except KeyError:
                raise UnknownStateLabelError(
                    f"label {cell!r} is not a state of column {header[j]!r}"
                ) from None
    dataset = Dataset(columns=columns, labels=labels, matrix=matrix)
    return dataset, dict(zip(columns, header))


def exact_marginals(net: DiscreteBayesNet) -> dict[VarId, np.ndarray]:
    """Exact single-variable marginals by exhaustive enumeration.

    Intended for validating the sampler on small nets; cost is the product
    of all cardinalities.
    """
    order = topological_order(net.graph)
    cards = [net.variables[v].cardinality for v in order]
    pos = {v: j for j, v in enumerate(order)}
    marginals = {v: np.zeros(net.variables[v].cardinality) for v in order}
    assignment = [0] * len(order)

    def recurse(j: int, prob: float) -> None:
        if j == len(order):
            for v in order:
                marginals[v][assignment[pos[v]]] += prob
            return
        v = order[j]
        cpt = net.cpts[v]
        idx = 0
        for p in cpt.parents:
            idx = idx * net.variables[p].cardinality + assignment[pos[p]]
        for s in range(cards[j]):
            assignment[j] = s
            recurse(j + 1, prob * cpt.table[idx, s])
        assignment[j] = 0

    recurse(0, 1.0)
    return marginals
