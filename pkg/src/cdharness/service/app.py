"""HTTP service wrapping the harness: sampling, discovery, augmentation,
corpus generation, benchmarking, and evaluation as endpoints.

The service is stateless; datasets and corpora travel inside request and
response bodies, so a thin client owns all file placement.
"""

from __future__ import annotations

import io
import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..augment import apply_condition, make_base_scenario, scenario_from_record, scenario_to_record
from ..bayesnet import DiscreteBayesNet, from_csv, load_builtin, parse_bif, to_csv
from ..discovery import AlgoConfig, format_algo_output, run_suite
from ..errors import CdharnessError, ValidationError
from ..evaluator import (
    TaggedReport,
    aggregate,
    build_judge_prompt,
    compare,
    condition_table,
    report_to_json,
    summary_to_csv,
    summary_to_text,
)
from ..llm_client import EndpointConfig, benchrun_from_record, benchrun_to_record, run_benchmark
from ..seeding import derive_seed
from ..sftgen import (
    CorpusConfig,
    SftInstance,
    emit_jsonl,
    instance_from_record,
    make_instance,
    make_split,
)
from . import schemas


def _resolve_net(source: schemas.NetworkSource) -> DiscreteBayesNet:
    if source.bif_text is not None:
        return parse_bif(source.bif_text)
    if source.network:
        return load_builtin(source.network)
    raise ValidationError("provide either a builtin network name or bif_text")


def _jsonl_to_instances(jsonl: str) -> list[SftInstance]:
    return [instance_from_record(json.loads(line)) for line in jsonl.splitlines() if line.strip()]


def _instances_to_jsonl(instances: list[SftInstance]) -> str:
    buf = io.StringIO()
    emit_jsonl(instances, buf)
    return buf.getvalue()


def create_app() -> FastAPI:
    app = FastAPI(title="cdharness", version=__version__)

    @app.exception_handler(CdharnessError)
    async def harness_error(_request: Request, exc: CdharnessError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error(_request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/sample", response_model=schemas.SampleResponse)
    def sample(request: schemas.SampleRequest):
        net = _resolve_net(request)
        scenario = make_base_scenario(net, request.rows, request.seed)
        return schemas.SampleResponse(
            csv=to_csv(scenario.dataset, scenario.name_map),
            columns=[int(v) for v in scenario.dataset.columns],
            name_map={int(v): n for v, n in scenario.name_map.items()},
            gold_edges_rendered=scenario.rendered_gold(),
            provenance=list(scenario.provenance),
        )

    @app.post("/discover", response_model=schemas.DiscoverResponse)
    def discover(request: schemas.DiscoverRequest):
        dataset, name_map = from_csv(request.csv)
        configs = [
            AlgoConfig(
                algorithm=name,
                alpha=request.alpha,
                max_cond_size=request.max_cond_size,
                prune_threshold=request.prune_threshold,
                seed=derive_seed(request.seed, name),
            )
            for name in request.algorithms
        ]
        result = run_suite(dataset, configs)
        outputs = [
            schemas.AlgoOutputModel(
                algorithm=out.algorithm,
                edges=sorted((name_map[a], name_map[b]) for a, b in out.edges),
                undirected=sorted(
                    tuple(sorted((name_map[a], name_map[b]))) for a, b in
                    (tuple(p) for p in out.undirected)
                ),
                diagnostics=out.diagnostics,
            )
            for out in result.outputs
        ]
        return schemas.DiscoverResponse(
            text=format_algo_output(result.outputs, name_map),
            outputs=outputs,
            failures=[{"algorithm": f.algorithm, "error": f.error} for f in result.failures],
        )

    @app.post("/augment", response_model=schemas.AugmentResponse)
    def augment_endpoint(request: schemas.AugmentRequest):
        net = _resolve_net(request)
        scenarios = []
        for i in range(request.count):
            seed = request.seed + i
            base = make_base_scenario(net, request.rows, seed)
            scenario = apply_condition(
                base, request.condition, seed, reorder=request.reorder, omit_k=request.omit_k
            )
            scenarios.append(
                schemas.ScenarioModel(
                    record=scenario_to_record(scenario),
                    dataset_csv=to_csv(scenario.dataset, scenario.name_map),
                )
            )
        return schemas.AugmentResponse(scenarios=scenarios)

    @app.post("/sft/instances", response_model=schemas.SftInstancesResponse)
    def sft_instances(request: schemas.SftInstancesRequest):
        from ..sftgen import _algo_text_for  # shared corpus helper

        instances = []
        for item in request.scenarios:
            scenario = scenario_from_record(item.record, item.dataset_csv)
            algo_text = None
            if request.with_algo:
                config = CorpusConfig(
                    with_algo=True,
                    algorithms=tuple(request.algorithms),
                    alpha=request.alpha,
                    algo_rows=request.algo_rows,
                )
                seed = scenario.provenance[0].get("seed", 0)
                algo_text = _algo_text_for(scenario, config, seed)
            instances.append(
                make_instance(scenario, request.rows_shown, request.with_algo, algo_text)
            )
        return schemas.SftInstancesResponse(
            jsonl=_instances_to_jsonl(instances), count=len(instances)
        )

    @app.post("/sft/corpus", response_model=schemas.CorpusResponse)
    def sft_corpus(request: schemas.CorpusRequest):
        net = _resolve_net(request)
        config = CorpusConfig(
            conditions=tuple(request.conditions),
            count_per_condition=request.count_per_condition,
            test_count_per_condition=request.test_count_per_condition,
            rows=request.rows,
            n_rows_shown=request.rows_shown,
            with_algo=request.with_algo,
            algo_rows=request.algo_rows,
            algorithms=tuple(request.algorithms),
            alpha=request.alpha,
            train_seed_start=request.train_seed_start,
            test_seed_start=request.test_seed_start,
        )
        train, test = make_split(net, config)
        return schemas.CorpusResponse(
            train_jsonl=_instances_to_jsonl(train),
            test_jsonl=_instances_to_jsonl(test),
            train_count=len(train),
            test_count=len(test),
        )

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(request: schemas.BenchRequest):
        instances = _jsonl_to_instances(request.jsonl)
        config = EndpointConfig(**request.endpoint.model_dump())
        run = run_benchmark(instances, config, request.with_algo)
        return schemas.BenchResponse(run=benchrun_to_record(run), success_rate=run.success_rate())

    @app.post("/eval/compare")
    def eval_compare(request: schemas.CompareRequest):
        return json.loads(report_to_json(compare(request.gold, request.model_output)))

    @app.post("/eval/judge-prompt", response_model=schemas.JudgePromptResponse)
    def judge_prompt(request: schemas.CompareRequest):
        return schemas.JudgePromptResponse(
            prompt=build_judge_prompt(request.gold, request.model_output)
        )

    @app.post("/eval/run", response_model=schemas.EvalRunResponse)
    def eval_run(request: schemas.EvalRunRequest):
        instances = _jsonl_to_instances(request.corpus_jsonl)
        by_id = {i.meta["instance_id"]: i for i in instances}
        pairs: list[tuple[str, str, SftInstance]] = []  # (model tag, text, instance)
        n_failures = 0
        if request.benchrun is not None:
            run = benchrun_from_record(request.benchrun)
            n_failures = len(run.failures)
            for completion in run.completions:
                instance = by_id.get(completion.instance_id)
                if instance is None:
                    raise ValidationError(
                        f"no gold instance for completion {completion.instance_id!r}"
                    )
                pairs.append((run.model, completion.text, instance))
        if request.answers is not None:
            for answer in request.answers:
                instance = by_id.get(answer.instance_id)
                if instance is None:
                    raise ValidationError(f"no gold instance for answer {answer.instance_id!r}")
                pairs.append((answer.model, answer.text, instance))
        if not pairs:
            raise ValidationError("nothing to evaluate: provide a benchrun or answers")

        tagged = []
        reports = []
        for model_tag, text, instance in pairs:
            report = compare(instance.assistant, text)
            tags = {
                "model": model_tag,
                "dataset": instance.meta.get("network", "unknown"),
                "condition": instance.meta.get("condition", "unknown"),
                "instance_id": instance.meta["instance_id"],
            }
            tagged.append(TaggedReport(report=report, tags=tags))
            reports.append({"tags": tags, "report": json.loads(report_to_json(report))})

        summary = aggregate(tagged, request.group_by)
        summary_rows = [
            {
                **dict(zip(request.group_by, row.key)),
                "n": row.n,
                "f1": row.f1,
                "precision": row.precision,
                "recall": row.recall,
            }
            for row in summary
        ]
        return schemas.EvalRunResponse(
            reports=reports,
            summary=summary_rows,
            csv=summary_to_csv(summary, request.group_by),
            table=summary_to_text(summary, request.group_by),
            condition_table=condition_table(tagged),
            n_failures=n_failures,
        )

    return app
