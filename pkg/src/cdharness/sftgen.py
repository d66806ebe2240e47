"""Instruction/target construction for fine-tuning and benchmarking.

Each instance is a system/user/assistant message triple. The system prompt
is one of two fixed texts (with or without algorithm outputs); the user
message carries the query, an optional dataset excerpt, and an optional
algorithm-output block; the assistant target is the rendered ground truth
behind a literal ``***Answer***`` label. Metadata (ground truth, condition
tags) never leaks into the message texts.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

from .augment import COMBOS, Scenario, compose, make_base_scenario
from .bayesnet import Dataset, DiscreteBayesNet
from .errors import IoError, RowCountError, SeedOverlapError, ValidationError
from .seeding import derive_seed

ANSWER_LABEL = "***Answer***"
EMPTY_ANSWER_BODY = "(no edges)"
DEFAULT_QUERY_TEMPLATE = "Find the causal graph for variables {variables}"

SYSTEM_PROMPT_WITH_ALGO = (
    "You are an expert in the field of Causal Inference. You are asked to help answer "
    "causal questions in a variety of domains. You may be given a dataset, some "
    "background information and a query to answer. You will also be presented with the "
    "outcome of a well-established method for causal inference. To answer the query, "
    "you should properly use your causal knowledge about the world along with the "
    "provided method outcome. Note the outcome of the causal inference method may not "
    "always be correct. Your goal is to provide the correct answer to the query. Do NOT "
    "invent new variables. If you invent new variables, your answer will be WRONG."
)

SYSTEM_PROMPT_WITHOUT_ALGO = (
    "You are an expert in the field of Causal Inference. You are asked to help answer "
    "causal questions in a variety of domains. You may be given a dataset, some "
    "background information and a query to answer. To answer the query, you should "
    "properly use your causal knowledge about the world along with the provided dataset "
    "if applicable. Your goal is to provide the correct answer to the query. Do NOT "
    "invent new variables. If you invent new variables, your answer will be WRONG."
)


@dataclass(frozen=True)
class SftInstance:
    system: str
    user: str
    assistant: str
    answer_span: tuple[int, int]
    meta: dict

    def answer_body(self) -> str:
        start, end = self.answer_span
        return self.assistant[start:end]


def build_system_prompt(with_algo: bool) -> str:
    return SYSTEM_PROMPT_WITH_ALGO if with_algo else SYSTEM_PROMPT_WITHOUT_ALGO


def build_user_message(
    scenario: Scenario,
    n_rows_shown: int,
    algo_text: str | None = None,
    query_template: str = DEFAULT_QUERY_TEMPLATE,
) -> str:
    """Assemble the user message: query, optional data excerpt, optional
    algorithm block. The ground truth and the condition tag never appear."""
    if n_rows_shown < 0 or n_rows_shown > scenario.dataset.n_rows:
        raise RowCountError(
            f"cannot show {n_rows_shown} rows of a {scenario.dataset.n_rows}-row dataset"
        )
    names = [scenario.name_map[v] for v in scenario.dataset.columns]
    sections = [query_template.format(variables=", ".join(names))]
    if n_rows_shown > 0:
        sections.append("Dataset:\n" + _csv_head(scenario.dataset, scenario.name_map, n_rows_shown))
    if algo_text is not None:
        sections.append("Method outcome:\n" + algo_text)
    return "\n\n".join(sections)


def _csv_head(dataset: Dataset, name_map, n_rows: int) -> str:
    out = io.StringIO()
    out.write(",".join(name_map[v] for v in dataset.columns))
    for i in range(n_rows):
        row = dataset.matrix[i]
        out.write("\n" + ",".join(dataset.labels[j][row[j]] for j in range(len(dataset.columns))))
    return out.getvalue()


def build_target(scenario: Scenario) -> tuple[str, tuple[int, int]]:
    """The assistant message and the character span of its answer body."""
    lines = scenario.rendered_gold()
    body = "\n".join(lines) if lines else EMPTY_ANSWER_BODY
    assistant = ANSWER_LABEL + "\n" + body
    start = len(ANSWER_LABEL) + 1
    return assistant, (start, len(assistant))


def make_instance(
    scenario: Scenario,
    n_rows_shown: int,
    with_algo: bool,
    algo_text: str | None = None,
    query_template: str = DEFAULT_QUERY_TEMPLATE,
) -> SftInstance:
    if with_algo and algo_text is None:
        raise ValidationError("with_algo instances need the algorithm output text")
    assistant, span = build_target(scenario)
    meta = {
        "instance_id": f"{scenario.scenario_id()}-{scenario.condition}-n{n_rows_shown}-"
                       f"{'algo' if with_algo else 'noalgo'}",
        "scenario_id": scenario.scenario_id(),
        "network": scenario.network,
        "condition": scenario.condition,
        "gold_edges_rendered": scenario.rendered_gold(),
        "with_algo": with_algo,
        "n_rows_shown": n_rows_shown,
        "provenance": list(scenario.provenance),
    }
    return SftInstance(
        system=build_system_prompt(with_algo),
        user=build_user_message(
            scenario, n_rows_shown, algo_text if with_algo else None, query_template
        ),
        assistant=assistant,
        answer_span=span,
        meta=meta,
    )


def audit_instance(instance: SftInstance) -> list[str]:
    """String-level leak checks on the prompt side of an instance.

    The ground truth may legitimately coincide with algorithm-output lines,
    so the check runs on the user message with the algorithm block removed.
    """
    problems: list[str] = []
    user = instance.user
    cut = user.find("Method outcome:")
    visible = user if cut < 0 else user[:cut]
    if "Correct Answer" in user:
        problems.append("user message contains 'Correct Answer'")
    condition = instance.meta.get("condition", "")
    if condition and condition in visible:
        problems.append(f"user message contains the condition tag {condition!r}")
    for line in instance.meta.get("gold_edges_rendered", []):
        if line and line in visible:
            problems.append(f"user message leaks the gold edge {line!r}")
    if not instance.assistant.startswith(ANSWER_LABEL):
        problems.append("assistant target does not start with the answer label")
    return problems


# ---------------------------------------------------------------------------
# Corpus generation


@dataclass(frozen=True)
class CorpusConfig:
    """Declarative recipe for one train/test corpus over a network."""

    conditions: tuple[str, ...] = COMBOS
    count_per_condition: int = 10
    rows: int = 200
    n_rows_shown: int = 50
    with_algo: bool = True
    algo_rows: int | None = None
    algorithms: tuple[str, ...] = ("pc", "hillclimb", "direct_lingam")
    alpha: float = 0.05
    train_seed_start: int = 0
    test_seed_start: int = 1_000_000
    test_count_per_condition: int | None = None
    query_template: str = DEFAULT_QUERY_TEMPLATE

    def __post_init__(self) -> None:
        for c in self.conditions:
            if c not in COMBOS:
                raise ValidationError(f"unknown condition {c!r}")


def _head(dataset: Dataset, n: int | None) -> Dataset:
    if n is None or n >= dataset.n_rows:
        return dataset
    return Dataset(columns=dataset.columns, labels=dataset.labels, matrix=dataset.matrix[:n])


def _algo_text_for(scenario: Scenario, config: CorpusConfig, seed: int) -> str:
    from .discovery import AlgoConfig, format_algo_output, run_suite

    configs = [
        AlgoConfig(algorithm=name, alpha=config.alpha, seed=derive_seed(seed, name))
        for name in config.algorithms
    ]
    result = run_suite(_head(scenario.dataset, config.algo_rows), configs)
    return format_algo_output(result.outputs, scenario.name_map)


def build_scenario(net: DiscreteBayesNet, condition: str, rows: int, seed: int) -> Scenario:
    base = make_base_scenario(net, rows, seed)
    return compose(base, condition, seed)


def make_split(
    net: DiscreteBayesNet, config: CorpusConfig
) -> tuple[list[SftInstance], list[SftInstance]]:
    """Generate train and test instances with disjoint dataset seeds.

    Test scenarios are freshly sampled realizations: structures and
    conditions repeat across the split, dataset seeds never do.
    """
    test_count = (
        config.test_count_per_condition
        if config.test_count_per_condition is not None
        else config.count_per_condition
    )
    train_range = range(config.train_seed_start, config.train_seed_start + config.count_per_condition)
    test_range = range(config.test_seed_start, config.test_seed_start + test_count)
    if range(
        max(train_range.start, test_range.start), min(train_range.stop, test_range.stop)
    ):
        raise SeedOverlapError(
            f"train seeds {train_range} overlap test seeds {test_range}"
        )

    def build(seeds: range) -> list[SftInstance]:
        instances = []
        for condition in config.conditions:
            for seed in seeds:
                scenario = build_scenario(net, condition, config.rows, seed)
                algo_text = (
                    _algo_text_for(scenario, config, seed) if config.with_algo else None
                )
                instances.append(
                    make_instance(
                        scenario,
                        config.n_rows_shown,
                        config.with_algo,
                        algo_text,
                        config.query_template,
                    )
                )
        return instances

    return build(train_range), build(test_range)


# ---------------------------------------------------------------------------
# Serialization


def instance_to_record(instance: SftInstance) -> dict:
    return {
        "messages": [
            {"role": "system", "content": instance.system},
            {"role": "user", "content": instance.user},
            {"role": "assistant", "content": instance.assistant},
        ],
        "answer_span": list(instance.answer_span),
        "meta": instance.meta,
    }


def instance_from_record(record: dict) -> SftInstance:
    roles = {m["role"]: m["content"] for m in record["messages"]}
    span = tuple(record["answer_span"])
    return SftInstance(
        system=roles["system"],
        user=roles["user"],
        assistant=roles["assistant"],
        answer_span=(int(span[0]), int(span[1])),
        meta=record["meta"],
    )


def emit_jsonl(instances, sink) -> int:
    """Write one JSON record per instance, sorted by instance id.

    ``sink`` is a path or a text file object. Output bytes depend only on
    the instances, so identical corpora produce identical files.
    """
    ordered = sorted(instances, key=lambda i: i.meta["instance_id"])
    lines = [
        json.dumps(instance_to_record(i), ensure_ascii=False, separators=(",", ":"))
        for i in ordered
    ]
    payload = "".join(line + "\n" for line in lines)
    if hasattr(sink, "write"):
        sink.write(payload)
    else:
        try:
            with open(sink, "w", encoding="utf-8") as fh:
                fh.write(payload)
        except OSError as exc:
            raise IoError(f"cannot write corpus file {sink}: {exc}") from exc
    return len(ordered)


def read_jsonl(source) -> list[SftInstance]:
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read corpus file {source}: {exc}") from exc
    return [
        instance_from_record(json.loads(line))
        for line in text.splitlines()
        if line.strip()
    ]
