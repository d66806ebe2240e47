"""Deterministic scoring of predicted causal graphs against ground truth.

The parser mirrors the judge protocol used for free-text model outputs:
an explicitly marked answer section supersedes everything before it, arrow
notation (including chains and reversed arrows) and a closed vocabulary of
verbal forms are extracted, node names are compared after whitespace
collapsing and case folding, and cycles or self-loops are reported exactly
as found. Metrics are direction-sensitive precision/recall/F1 over edges.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyGroupError
from .graph import EdgeMetrics, edge_metrics

ANSWER_MARKER_RE = re.compile(
    r"\*{3}\s*answer\s*:?\s*\*{3}|final\s+answer\s*:|answer\s*:",
    re.IGNORECASE,
)
ARROW_RE = re.compile(r"->|<-")
LIST_MARKER_RE = re.compile(r"^\s*(?:[-*•]+|\d+[.)])\s+")
# Closed verbal vocabulary; extending it is configuration, not code.
VERBAL_PATTERNS: tuple[str, ...] = ("causes", "leads to", "influences")
_STRIP_CHARS = " \t\"'`*_()[]{}.,;:!?"
_CLAUSE_BOUNDARY = re.compile(r"[.;:!?]")

EdgeStr = tuple[str, str]


def _normalize(name: str) -> str:
    return " ".join(name.split()).casefold()


def _clean(name: str) -> str:
    return " ".join(name.strip(_STRIP_CHARS).split())


def parse_edges(text: str, verbs: Sequence[str] = VERBAL_PATTERNS) -> list[EdgeStr]:
    """Extract directed edges from free text.

    Returns surface-form (tail, head) pairs, deduplicated by normalized
    name identity in first-seen order. Unparseable text yields an empty
    list; cycles and self-loops are kept as found.
    """
    markers = list(ANSWER_MARKER_RE.finditer(text))
    if markers:
        text = text[markers[-1].end():]

    edges: dict[tuple[str, str], EdgeStr] = {}

    def add(tail: str, head: str) -> None:
        tail, head = _clean(tail), _clean(head)
        if not tail or not head:
            return
        key = (_normalize(tail), _normalize(head))
        edges.setdefault(key, (tail, head))

    for raw_line in text.splitlines():
        line = LIST_MARKER_RE.sub("", raw_line)
        if ARROW_RE.search(line):
            _parse_arrow_chain(line, add)
        else:
            _parse_verbal(line, add, verbs)
    return list(edges.values())


def _parse_arrow_chain(line: str, add) -> None:
    parts = ARROW_RE.split(line)
    arrows = ARROW_RE.findall(line)
    # Leading junk before the first name and trailing junk after the last
    # belong to the surrounding sentence, not the chain.
    if parts:
        parts[0] = _CLAUSE_BOUNDARY.split(parts[0])[-1]
        parts[-1] = _CLAUSE_BOUNDARY.split(parts[-1])[0]
    for i, arrow in enumerate(arrows):
        left, right = parts[i], parts[i + 1]
        if arrow == "->":
            add(left, right)
        else:
            add(right, left)


def _parse_verbal(line: str, add, verbs: Sequence[str]) -> None:
    for clause in _CLAUSE_BOUNDARY.split(line):
        for verb in verbs:
            m = re.search(rf"\b{re.escape(verb)}\b", clause, re.IGNORECASE)
            if not m:
                continue
            tail = clause[: m.start()]
            heads = re.split(r",\s*|\s+and\s+", clause[m.end():])
            for head in heads:
                add(tail, head)
            break


@dataclass(frozen=True)
class EvalReport:
    gold_edges_parsed: list[str]
    model_edges_extracted: list[str]
    recovered_edges: list[str]
    missed_edges: list[str]
    extra_edges: list[str]
    recovered_count: int
    missed_count: int
    extra_count: int
    metrics: EdgeMetrics
    diagnostics: dict = field(default_factory=dict)


def _fmt(edge: EdgeStr) -> str:
    return f"{edge[0]} -> {edge[1]}"


def compare(gold_text: str, model_text: str) -> EvalReport:
    """Parse both texts and report recovered/missed/extra edges and metrics.

    Rendering prefers the gold surface forms for matched edges; identity is
    case-insensitive with collapsed whitespace.
    """
    gold = parse_edges(gold_text)
    model = parse_edges(model_text)
    gold_by_key = {(_normalize(a), _normalize(b)): (a, b) for a, b in gold}
    model_by_key = {(_normalize(a), _normalize(b)): (a, b) for a, b in model}

    gold_keys = set(gold_by_key)
    model_keys = set(model_by_key)
    recovered = sorted(gold_keys & model_keys)
    missed = sorted(gold_keys - model_keys)
    extra = sorted(model_keys - gold_keys)
    metrics = edge_metrics(gold_keys, model_keys)

    gold_nodes = {n for k in gold_keys for n in k}
    unmatched_nodes = sorted(
        {n for k in extra for n in k if n not in gold_nodes}
    )
    return EvalReport(
        gold_edges_parsed=sorted(_fmt(gold_by_key[k]) for k in gold_keys),
        model_edges_extracted=sorted(_fmt(model_by_key[k]) for k in model_keys),
        recovered_edges=[_fmt(gold_by_key[k]) for k in recovered],
        missed_edges=[_fmt(gold_by_key[k]) for k in missed],
        extra_edges=[_fmt(model_by_key[k]) for k in extra],
        recovered_count=len(recovered),
        missed_count=len(missed),
        extra_count=len(extra),
        metrics=metrics,
        diagnostics={"model_nodes_outside_gold": unmatched_nodes},
    )


def report_to_json(report: EvalReport) -> str:
    """The report's wire form: the judge-protocol keys plus a metrics object."""
    payload = {
        "gold_edges_parsed": report.gold_edges_parsed,
        "model_edges_extracted": report.model_edges_extracted,
        "recovered_edges": report.recovered_edges,
        "missed_edges": report.missed_edges,
        "extra_edges": report.extra_edges,
        "recovered_count": report.recovered_count,
        "missed_count": report.missed_count,
        "extra_count": report.extra_count,
        "metrics": {
            "tp": report.metrics.tp,
            "fp": report.metrics.fp,
            "fn": report.metrics.fn_,
            "precision": report.metrics.precision,
            "recall": report.metrics.recall,
            "f1": report.metrics.f1,
        },
    }
    return json.dumps(payload, ensure_ascii=False, indent=2)


JUDGE_PROMPT_TEMPLATE = """Analyze the following causal relationship information and provide a structured comparison in JSON format.

Ground Truth Causal Relationships (Gold Standard): {gold_answer_str}

Model Generated Output: {model_output_str}

Instructions:

1. Parse the Gold Standard: Identify all individual directed causal edges (e.g., "A -> B", "C <- D" which is equivalent to "D -> C") from the Gold Standard section. List them using only "->" notation.
2. Parse the Model Output: Carefully extract all causal relationships from the text block labeled "Model Generated Output". Look for patterns like "X -> Y", "X <- Y" (which is equivalent to "Y -> X"), "X causes Y", or "X leads to Y". Consider both explicit statements like "A causes B" and structured lists (with bullet points, numbered items, etc.). Ignore introductory phrases, confidence scores, apologies, or explanations unless they define relationships. Convert all relationships to "X -> Y" notation - for example "X <- Y" should be recorded as "Y -> X". Extract all relationships you find, even if they form cycles (like A->B->C->A). While proper causal graphs should be acyclic, faithfully report what the model output contains.
CRITICAL INSTRUCTION: If the text contains a section marked with "***Answer:***" or similar indicator (like "Final Answer:", "Answer:", etc.), ONLY extract edges from that section and IGNORE all other parts of the text. The relationships listed in this final answer section are the definitive edges that should be extracted, superseding any relationships mentioned earlier in the text.
3. Compare: Compare the set of edges extracted from the model output against the set of edges from the Gold Standard.
4. Calculate Metrics:
   - recovered_edges: List the edges present in both the Gold Standard and the Model Output.
   - missed_edges: List the edges present in the Gold Standard but missing from the Model Output.
   - extra_edges: List the edges present in the Model Output but not in the Gold Standard.
   - recovered_count: Count of recovered_edges.
   - missed_count: Count of missed_edges.
   - extra_count: Count of extra_edges.
5. Format Output: Return only a single JSON object containing the following keys: gold_edges_parsed, model_edges_extracted, recovered_edges, missed_edges, extra_edges, recovered_count, missed_count, extra_count. Ensure edge representation is consistent (e.g., always use "->").

Example Edge Parsing:
- "A -> B" is one edge.
- "C <- D" should be treated as "D -> C".
- "E -> F -> G" implies edges "E -> F" and "F -> G".
- "- H -> I" in a list implies edge "H -> I".
- Phrases like "X causes Y" should be converted to "X -> Y".
- A statement that "X influences Y and Z" implies both "X -> Y" and "X -> Z"."""


def build_judge_prompt(gold_text: str, model_text: str) -> str:
    """The judge prompt with the two payloads substituted in."""
    return JUDGE_PROMPT_TEMPLATE.format(
        gold_answer_str=gold_text, model_output_str=model_text
    )


# ---------------------------------------------------------------------------
# Aggregation


@dataclass(frozen=True)
class TaggedReport:
    report: EvalReport
    tags: dict


@dataclass(frozen=True)
class GroupSummary:
    key: tuple[str, ...]
    n: int
    f1: float
    precision: float
    recall: float


def aggregate(reports: Iterable[TaggedReport], group_keys: Sequence[str]) -> list[GroupSummary]:
    """Mean metrics per group of tag values, sorted by group key."""
    reports = list(reports)
    group_keys = list(group_keys)
    if not reports or not group_keys:
        raise EmptyGroupError("aggregation needs reports and at least one group key")
    groups: dict[tuple[str, ...], list[EvalReport]] = {}
    for tagged in reports:
        missing = [k for k in group_keys if k not in tagged.tags]
        if missing:
            raise EmptyGroupError(f"report lacks grouping keys {missing}")
        key = tuple(str(tagged.tags[k]) for k in group_keys)
        groups.setdefault(key, []).append(tagged.report)
    out = []
    for key in sorted(groups):
        members = groups[key]
        n = len(members)
        out.append(
            GroupSummary(
                key=key,
                n=n,
                f1=sum(r.metrics.f1 for r in members) / n,
                precision=sum(r.metrics.precision for r in members) / n,
                recall=sum(r.metrics.recall for r in members) / n,
            )
        )
    return out


def summary_to_csv(summary: list[GroupSummary], group_keys: Sequence[str]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([*group_keys, "n", "f1", "precision", "recall"])
    for row in summary:
        writer.writerow([*row.key, row.n, f"{row.f1:.4f}", f"{row.precision:.4f}", f"{row.recall:.4f}"])
    return out.getvalue()


def summary_to_text(summary: list[GroupSummary], group_keys: Sequence[str]) -> str:
    """Fixed-width rendering of the grouped means."""
    headers = [*group_keys, "n", "f1", "precision", "recall"]
    rows = [
        [*row.key, str(row.n), f"{row.f1:.3f}", f"{row.precision:.3f}", f"{row.recall:.3f}"]
        for row in summary
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def condition_table(reports: Iterable[TaggedReport], conditions: Sequence[str] = ("original", "omitted", "permuted")) -> str:
    """Benchmark-style layout: one row per model, one F1 column per
    (dataset, condition) pair."""
    reports = list(reports)
    if not reports:
        raise EmptyGroupError("no reports to tabulate")
    summary = aggregate(reports, ["model", "dataset", "condition"])
    cells = {row.key: row.f1 for row in summary}
    models = sorted({row.key[0] for row in summary})
    datasets = sorted({row.key[1] for row in summary})

    headers = ["model"] + [f"{d}/{c}" for d in datasets for c in conditions]
    lines_rows = []
    for m in models:
        row = [m]
        for d in datasets:
            for c in conditions:
                v = cells.get((m, d, c))
                row.append("-" if v is None else f"{v:.3f}")
        lines_rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in lines_rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in lines_rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)
