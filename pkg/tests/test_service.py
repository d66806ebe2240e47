from __future__ import annotations

import json

import httpx
import pytest

from cdharness.asgisync import SyncASGITransport
from cdharness.service import create_app


@pytest.fixture(scope="module")
def client():
    return httpx.Client(
        transport=SyncASGITransport(create_app()),
        base_url="http://svc",
        timeout=600,
    )


def test_healthz(client):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"


class TestSample:
    def test_builtin_network(self, client):
        r = client.post("/sample", json={"network": "asia", "rows": 10, "seed": 1})
        assert r.status_code == 200
        body = r.json()
        assert len(body["csv"].splitlines()) == 11
        assert len(body["gold_edges_rendered"]) == 8

    def test_zero_rows_header_only(self, client):
        r = client.post("/sample", json={"network": "asia", "rows": 0, "seed": 1})
        assert len(r.json()["csv"].splitlines()) == 1

    def test_bif_text_source(self, client):
        bif = "network t {\n}\nvariable a {\n  type discrete [ 2 ] { x, y };\n}\n" \
              "variable b {\n  type discrete [ 2 ] { x, y };\n}\n" \
              "probability ( a ) {\n  table 0.5, 0.5;\n}\n" \
              "probability ( b | a ) {\n  (x) 0.9, 0.1;\n  (y) 0.1, 0.9;\n}\n"
        r = client.post("/sample", json={"bif_text": bif, "rows": 5, "seed": 2})
        assert r.status_code == 200
        assert r.json()["gold_edges_rendered"] == ["a -> b"]

    def test_unknown_network_400(self, client):
        r = client.post("/sample", json={"network": "nonexistent", "rows": 5, "seed": 0})
        assert r.status_code == 400
        assert "unknown builtin network" in r.json()["detail"]

    def test_invalid_bif_400(self, client):
        r = client.post("/sample", json={"bif_text": "network x {", "rows": 1, "seed": 0})
        assert r.status_code == 400


class TestDiscover:
    def test_pc_on_sampled_csv(self, client):
        csv = client.post("/sample", json={"network": "asia", "rows": 500, "seed": 3}).json()["csv"]
        r = client.post("/discover", json={"csv": csv, "algorithms": ["pc"]})
        assert r.status_code == 200
        body = r.json()
        assert body["outputs"][0]["algorithm"] == "pc"
        assert body["text"].startswith("Method: pc")

    def test_determinism(self, client):
        csv = client.post("/sample", json={"network": "asia", "rows": 300, "seed": 4}).json()["csv"]
        payload = {"csv": csv, "algorithms": ["pc", "hillclimb"]}
        first = client.post("/discover", json=payload).json()["text"]
        second = client.post("/discover", json=payload).json()["text"]
        assert first == second


class TestAugmentAndCorpus:
    def test_augment_conditions(self, client):
        r = client.post("/augment", json={
            "network": "earthquake", "condition": "permuted",
            "count": 3, "rows": 20, "seed": 9,
        })
        assert r.status_code == 200
        scenarios = r.json()["scenarios"]
        assert len(scenarios) == 3
        assert all(s["record"]["condition"] == "permuted" for s in scenarios)

    def test_sft_instances_from_scenarios(self, client):
        scenarios = client.post("/augment", json={
            "network": "earthquake", "condition": "original",
            "count": 2, "rows": 30, "seed": 5,
        }).json()["scenarios"]
        r = client.post("/sft/instances", json={
            "scenarios": scenarios, "rows_shown": 5, "with_algo": False,
        })
        assert r.status_code == 200
        body = r.json()
        assert body["count"] == 2
        record = json.loads(body["jsonl"].splitlines()[0])
        assert [m["role"] for m in record["messages"]] == ["system", "user", "assistant"]

    def test_corpus_split(self, client):
        r = client.post("/sft/corpus", json={
            "network": "earthquake", "conditions": ["original"],
            "count_per_condition": 2, "rows": 30, "rows_shown": 5,
            "with_algo": False,
        })
        body = r.json()
        assert body["train_count"] == 2 and body["test_count"] == 2
        assert body["train_jsonl"] != body["test_jsonl"]

    def test_overlapping_split_400(self, client):
        r = client.post("/sft/corpus", json={
            "network": "earthquake", "count_per_condition": 5,
            "train_seed_start": 0, "test_seed_start": 2,
            "rows": 10, "with_algo": False,
        })
        assert r.status_code == 400


class TestEval:
    def test_compare_endpoint(self, client):
        r = client.post("/eval/compare", json={
            "gold": "a -> b\nb -> c", "model_output": "***Answer***\na -> b\nc -> b",
        })
        body = r.json()
        assert body["recovered_count"] == 1
        assert body["metrics"]["f1"] == 0.5

    def test_judge_prompt_endpoint(self, client):
        r = client.post("/eval/judge-prompt", json={"gold": "G", "model_output": "M"})
        assert "CRITICAL INSTRUCTION:" in r.json()["prompt"]

    def test_eval_run_with_answers(self, client):
        corpus = client.post("/sft/corpus", json={
            "network": "earthquake", "conditions": ["original", "permuted"],
            "count_per_condition": 1, "rows": 30, "rows_shown": 5,
            "with_algo": False,
        }).json()["test_jsonl"]
        answers = []
        for line in corpus.splitlines():
            record = json.loads(line)
            answers.append({
                "instance_id": record["meta"]["instance_id"],
                "text": record["messages"][2]["content"],
                "model": "oracle",
            })
        r = client.post("/eval/run", json={"corpus_jsonl": corpus, "answers": answers})
        assert r.status_code == 200
        body = r.json()
        assert all(row["f1"] == 1.0 for row in body["summary"])
        assert "earthquake/original" in body["condition_table"]

    def test_eval_run_unknown_instance_400(self, client):
        corpus = client.post("/sft/corpus", json={
            "network": "earthquake", "conditions": ["original"],
            "count_per_condition": 1, "rows": 10, "rows_shown": 0,
            "with_algo": False,
        }).json()["test_jsonl"]
        r = client.post("/eval/run", json={
            "corpus_jsonl": corpus,
            "answers": [{"instance_id": "ghost", "text": "a -> b"}],
        })
        assert r.status_code == 400
        assert "ghost" in r.json()["detail"]
