"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class NetworkSource(BaseModel):
    """Either a packaged network name or raw BIF text."""

    network: str | None = None
    bif_text: str | None = None


class SampleRequest(NetworkSource):
    rows: int = Field(default=200, ge=0)
    seed: int = 0


class SampleResponse(BaseModel):
    csv: str
    columns: list[int]
    name_map: dict[int, str]
    gold_edges_rendered: list[str]
    provenance: list[dict]


class DiscoverRequest(BaseModel):
    csv: str
    algorithms: list[str] = ["pc", "hillclimb", "direct_lingam"]
    alpha: float = 0.05
    max_cond_size: int = 3
    prune_threshold: float = 0.05
    seed: int = 0


class AlgoOutputModel(BaseModel):
    algorithm: str
    edges: list[tuple[str, str]]
    undirected: list[tuple[str, str]]
    diagnostics: dict


class DiscoverResponse(BaseModel):
    text: str
    outputs: list[AlgoOutputModel]
    failures: list[dict]


class AugmentRequest(NetworkSource):
    condition: str = "original"
    count: int = Field(default=1, ge=1)
    rows: int = Field(default=200, ge=0)
    seed: int = 0
    reorder: bool = True
    omit_k: int | None = None


class ScenarioModel(BaseModel):
    record: dict
    dataset_csv: str


class AugmentResponse(BaseModel):
    scenarios: list[ScenarioModel]


class SftInstancesRequest(BaseModel):
    scenarios: list[ScenarioModel]
    rows_shown: int = 50
    with_algo: bool = True
    algorithms: list[str] = ["pc", "hillclimb", "direct_lingam"]
    alpha: float = 0.05
    algo_rows: int | None = None


class SftInstancesResponse(BaseModel):
    jsonl: str
    count: int


class CorpusRequest(NetworkSource):
    conditions: list[str] = ["original", "omitted", "permuted"]
    count_per_condition: int = Field(default=5, ge=1)
    test_count_per_condition: int | None = None
    rows: int = 200
    rows_shown: int = 50
    with_algo: bool = True
    algo_rows: int | None = None
    algorithms: list[str] = ["pc", "hillclimb", "direct_lingam"]
    alpha: float = 0.05
    train_seed_start: int = 0
    test_seed_start: int = 1_000_000


class CorpusResponse(BaseModel):
    train_jsonl: str
    test_jsonl: str
    train_count: int
    test_count: int


class EndpointModel(BaseModel):
    base_url: str
    model: str
    api_key_env: str | None = None
    temperature: float = 0.0
    max_tokens: int = 2048
    timeout: float = 60.0
    max_retries: int = 3
    concurrency_cap: int = Field(default=4, ge=1)


class BenchRequest(BaseModel):
    jsonl: str
    endpoint: EndpointModel
    with_algo: bool = True


class BenchResponse(BaseModel):
    run: dict
    success_rate: float


class CompareRequest(BaseModel):
    gold: str
    model_output: str


class JudgePromptResponse(BaseModel):
    prompt: str


class AnswerModel(BaseModel):
    instance_id: str
    text: str
    model: str = "answers"


class EvalRunRequest(BaseModel):
    corpus_jsonl: str
    benchrun: dict | None = None
    answers: list[AnswerModel] | None = None
    group_by: list[str] = ["model", "dataset", "condition"]


class EvalRunResponse(BaseModel):
    reports: list[dict]
    summary: list[dict]
    csv: str
    table: str
    condition_table: str
    n_failures: int
