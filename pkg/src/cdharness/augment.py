"""Scenario construction and the augmentation operators.

A scenario bundles a sampled dataset, its display names, and the matching
ground-truth graph. Augmentations transform scenarios while keeping the
ground truth correct:

* name permutation shuffles which display name sits on which column (the
  data and the id-level ground truth do not move, so the *rendered* truth
  becomes deliberately misleading);
* random naming replaces display names with fresh non-semantic tokens;
* column reordering permutes presentation order only;
* variable omission drops columns and replaces the ground truth by its
  latent projection over the remaining variables;
* the combination conditions (original / omitted / permuted) always apply
  column reordering on top, so none of them leaks positional clues.

Every operator is deterministic given its seed, and the provenance list a
scenario carries is sufficient to replay it bit-exactly from the source
network.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from .bayesnet import Dataset, DiscreteBayesNet, ancestral_sample, gold_graph
from .errors import TooFewColumnsError, UnknownNodeError, ValidationError
from .graph import Dag, VarId, marginalize, render_edge_list
from .seeding import derive_seed

COMBOS = ("original", "omitted", "permuted")

# Omission count: drop more variables from large networks so the
# marginalized structure stays nontrivial without emptying the scenario.
def default_omit_count(n_columns: int) -> int:
    return 8 if n_columns > 20 else 2


@dataclass(frozen=True)
class Scenario:
    dataset: Dataset
    name_map: dict[VarId, str]
    gold: Dag
    condition: str
    provenance: tuple[dict, ...]

    def __post_init__(self) -> None:
        cols = set(self.dataset.columns)
        if set(self.name_map) != cols:
            raise ValidationError("name_map must cover exactly the dataset columns")
        if len(set(self.name_map.values())) != len(self.name_map):
            raise ValidationError("display names must be distinct")
        if set(self.gold.nodes) != cols:
            raise ValidationError("gold nodes must equal the dataset columns")

    @property
    def network(self) -> str:
        return self.provenance[0].get("network", "unknown")

    def rendered_gold(self) -> list[str]:
        text = render_edge_list(self.gold.edges, self.name_map)
        return text.split("\n") if text else []

    def scenario_id(self) -> str:
        blob = json.dumps(list(self.provenance), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))


def make_base_scenario(net: DiscreteBayesNet, n_rows: int, seed: int) -> Scenario:
    """Sample the network and pair the data with its true graph and names."""
    return Scenario(
        dataset=ancestral_sample(net, n_rows, seed),
        name_map=net.name_map(),
        gold=gold_graph(net),
        condition="original",
        provenance=({"op": "sample", "network": net.name, "rows": n_rows, "seed": seed},),
    )


# ---------------------------------------------------------------------------
# Name permutation


def apply_name_permutation(scenario: Scenario, perm: list[int]) -> Scenario:
    """Reassign display names: column i takes the name of column perm[i]."""
    cols = scenario.dataset.columns
    if sorted(perm) != list(range(len(cols))):
        raise ValidationError("perm must be a permutation of the column positions")
    new_names = {cols[i]: scenario.name_map[cols[p]] for i, p in enumerate(perm)}
    return replace(scenario, name_map=new_names)


def permute_names(scenario: Scenario, seed: int) -> Scenario:
    """Shuffle display names across columns (misleading-names condition).

    The drawn permutation is uniform over those that actually change the
    rendered ground truth, so a "permuted" scenario never renders like its
    base; plain non-identity draws are the fallback when the graph is too
    symmetric for any draw to change the rendering.
    """
    d = len(scenario.dataset.columns)
    if d < 2:
        raise TooFewColumnsError("name permutation needs at least two columns")
    rng = _rng(seed)
    base_render = scenario.rendered_gold()
    chosen: list[int] | None = None
    fallback: list[int] | None = None
    for _ in range(1000):
        perm = list(map(int, rng.permutation(d)))
        if perm == list(range(d)):
            continue
        fallback = fallback or perm
        if apply_name_permutation(scenario, perm).rendered_gold() != base_render:
            chosen = perm
            break
    if chosen is None:
        if fallback is None:
            raise ValidationError("could not draw a non-identity permutation")
        chosen = fallback
    out = apply_name_permutation(scenario, chosen)
    return replace(
        out,
        condition="permuted",
        provenance=scenario.provenance + ({"op": "permute_names", "seed": seed},),
    )


def random_names(scenario: Scenario, seed: int, length: int = 4) -> Scenario:
    """Replace every display name with a fresh non-semantic identifier."""
    rng = _rng(seed)
    alphabet = "abcdefghijklmnopqrstuvwxyz"
    digits = alphabet + "0123456789"
    names: set[str] = set()
    new_map: dict[VarId, str] = {}
    for v in scenario.dataset.columns:
        while True:
            token = alphabet[rng.integers(len(alphabet))] + "".join(
                digits[rng.integers(len(digits))] for _ in range(length - 1)
            )
            if token not in names:
                names.add(token)
                new_map[v] = token
                break
    return replace(
        scenario,
        name_map=new_map,
        condition="random_names",
        provenance=scenario.provenance + ({"op": "random_names", "seed": seed, "length": length},),
    )


# ---------------------------------------------------------------------------
# Column reordering


def apply_column_permutation(scenario: Scenario, perm: list[int]) -> Scenario:
    """Present column perm[i] at position i; names travel with their columns."""
    ds = scenario.dataset
    if sorted(perm) != list(range(len(ds.columns))):
        raise ValidationError("perm must be a permutation of the column positions")
    new_ds = Dataset(
        columns=tuple(ds.columns[p] for p in perm),
        labels=tuple(ds.labels[p] for p in perm),
        matrix=ds.matrix[:, perm],
    )
    return replace(scenario, dataset=new_ds)


def reorder_columns(scenario: Scenario, seed: int) -> Scenario:
    """Uniformly permute the presentation order of the columns."""
    d = len(scenario.dataset.columns)
    if d < 2:
        raise TooFewColumnsError("column reordering needs at least two columns")
    perm = list(map(int, _rng(seed).permutation(d)))
    out = apply_column_permutation(scenario, perm)
    return replace(
        out,
        provenance=scenario.provenance + ({"op": "reorder_columns", "seed": seed},),
    )


# ---------------------------------------------------------------------------
# Variable omission


def omit_variables(scenario: Scenario, k_or_subset, seed: int = 0) -> Scenario:
    """Drop variables and marginalize the ground truth over what remains.

    ``k_or_subset`` is either an explicit iterable of VarIds or a count of
    columns to drop uniformly at random.
    """
    ds = scenario.dataset
    if isinstance(k_or_subset, int):
        k = k_or_subset
        if len(ds.columns) - k < 2:
            raise TooFewColumnsError("omission must leave at least two columns")
        picked = _rng(seed).choice(len(ds.columns), size=k, replace=False) if k else []
        omitted = sorted(ds.columns[int(i)] for i in picked)
        record = {"op": "omit_variables", "k": k, "seed": seed}
    else:
        omitted = sorted(set(k_or_subset))
        unknown = set(omitted) - set(ds.columns)
        if unknown:
            raise UnknownNodeError(f"cannot omit undeclared columns {sorted(unknown)}")
        if len(ds.columns) - len(omitted) < 2:
            raise TooFewColumnsError("omission must leave at least two columns")
        record = {"op": "omit_variables", "subset": [int(v) for v in omitted]}
    if not omitted:
        return scenario
    keep = [j for j, v in enumerate(ds.columns) if v not in omitted]
    new_ds = Dataset(
        columns=tuple(ds.columns[j] for j in keep),
        labels=tuple(ds.labels[j] for j in keep),
        matrix=ds.matrix[:, keep],
    )
    return Scenario(
        dataset=new_ds,
        name_map={v: n for v, n in scenario.name_map.items() if v not in omitted},
        gold=marginalize(scenario.gold, omitted),
        condition="omitted",
        provenance=scenario.provenance + (record,),
    )


# ---------------------------------------------------------------------------
# Combination conditions


def compose(scenario: Scenario, combo: str, seed: int) -> Scenario:
    """Apply one of the named combination conditions.

    Column reordering is always part of the combination; ``omitted`` first
    drops variables, ``permuted`` first shuffles names. Sub-seeds derive
    from ``seed`` by the op-name hashing rule in :mod:`cdharness.seeding`.
    """
    if combo not in COMBOS:
        raise ValidationError(f"unknown combo {combo!r}; choose from {COMBOS}")
    return apply_condition(scenario, combo, seed, reorder=True)


def apply_condition(
    scenario: Scenario,
    condition: str,
    seed: int,
    reorder: bool = True,
    omit_k: int | None = None,
) -> Scenario:
    """Build a named condition, optionally without the foundational
    column reordering (the presentation-order control)."""
    if condition not in (*COMBOS, "random_names"):
        raise ValidationError(f"unknown condition {condition!r}")
    out = scenario
    if condition == "omitted":
        k = omit_k if omit_k is not None else default_omit_count(len(out.dataset.columns))
        out = omit_variables(out, k, derive_seed(seed, "omit_variables"))
    elif condition == "permuted":
        out = permute_names(out, derive_seed(seed, "permute_names"))
    elif condition == "random_names":
        out = random_names(out, derive_seed(seed, "random_names"))
    if reorder:
        out = reorder_columns(out, derive_seed(seed, "reorder_columns"))
    return replace(out, condition=condition)


def replay(net: DiscreteBayesNet, provenance) -> Scenario:
    """Reconstruct a scenario from its provenance records."""
    records = list(provenance)
    if not records or records[0].get("op") != "sample":
        raise ValidationError("provenance must start with a sample record")
    first = records[0]
    if first.get("network") != net.name:
        raise ValidationError(
            f"provenance is for network {first.get('network')!r}, got {net.name!r}"
        )
    scenario = make_base_scenario(net, first["rows"], first["seed"])
    for rec in records[1:]:
        op = rec.get("op")
        if op == "permute_names":
            scenario = permute_names(scenario, rec["seed"])
        elif op == "random_names":
            scenario = random_names(scenario, rec["seed"], rec.get("length", 4))
        elif op == "reorder_columns":
            scenario = reorder_columns(scenario, rec["seed"])
        elif op == "omit_variables":
            if "subset" in rec:
                scenario = omit_variables(scenario, rec["subset"])
            else:
                scenario = omit_variables(scenario, rec["k"], rec["seed"])
        else:
            raise ValidationError(f"unknown provenance op {op!r}")
    return scenario


# ---------------------------------------------------------------------------
# Manifest records


def scenario_to_record(scenario: Scenario, dataset_path: str | None = None,
                       inline_csv: str | None = None) -> dict:
    """The JSON shape of one scenario manifest line."""
    record = {
        "id": scenario.scenario_id(),
        "network": scenario.network,
        "condition": scenario.condition,
        "columns": [int(v) for v in scenario.dataset.columns],
        "labels": [list(labs) for labs in scenario.dataset.labels],
        "name_map": {str(v): n for v, n in scenario.name_map.items()},
        "gold_edges": sorted([int(a), int(b)] for a, b in scenario.gold.edges),
        "gold_edges_rendered": scenario.rendered_gold(),
        "provenance": list(scenario.provenance),
    }
    if dataset_path is not None:
        record["dataset_path"] = dataset_path
    if inline_csv is not None:
        record["dataset_csv"] = inline_csv
    return record


def scenario_from_record(record: dict, csv_text: str) -> Scenario:
    """Rebuild a scenario from a manifest record plus its dataset CSV."""
    columns = tuple(int(v) for v in record["columns"])
    labels = tuple(tuple(labs) for labs in record["labels"])
    lines = [ln for ln in csv_text.splitlines() if ln.strip()]
    index = [{s: i for i, s in enumerate(labs)} for labs in labels]
    matrix = np.zeros((max(len(lines) - 1, 0), len(columns)), dtype=np.int64)
    for i, line in enumerate(lines[1:]):
        for j, cell in enumerate(line.split(",")):
            matrix[i, j] = index[j][cell]
    dataset = Dataset(columns=columns, labels=labels, matrix=matrix)
    gold = Dag(
        nodes=tuple(sorted(columns)),
        edges=frozenset((int(a), int(b)) for a, b in record["gold_edges"]),
    )
    return Scenario(
        dataset=dataset,
        name_map={int(v): n for v, n in record["name_map"].items()},
        gold=gold,
        condition=record["condition"],
        provenance=tuple(record["provenance"]),
    )
