"""Command-line pipeline driver.

The CLI is a thin client of the HTTP service: every subcommand builds a
request, sends it through the service API (an in-process instance by
default, or a remote one via ``--server`` / ``CDHARNESS_SERVER``), and
writes the returned artifacts to local files.

Exit codes: 0 success, 2 user or configuration error, 3 benchmark run with
more than 10% failed instances.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .runconfig import config_digest, load_config_file, merge_config, resolved_config

EXIT_USER_ERROR = 2
EXIT_BENCH_DEGRADED = 3
BENCH_SUCCESS_THRESHOLD = 0.9
DEFAULT_ALGOS = "pc,hillclimb,direct_lingam"


class ServiceClient:
    """HTTP access to the service, in-process unless a server is given."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=3600)
        else:
            from .asgisync import SyncASGITransport
            from .service import create_app

            self._client = httpx.Client(
                transport=SyncASGITransport(create_app()),
                base_url="http://cdharness.internal",
                timeout=3600,
            )

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            _fail(f"service unreachable: {exc}")
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            _fail(f"{path} failed: {detail}")
        return response.json()


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_USER_ERROR)


def _network_payload(network: str) -> dict:
    path = Path(network)
    if path.suffix == ".bif" or path.exists():
        try:
            return {"bif_text": path.read_text(encoding="utf-8")}
        except OSError as exc:
            _fail(f"cannot read network file {network}: {exc}")
    return {"network": network}


def _resolve(ctx: click.Context, command: str) -> dict:
    """File config + flags, flags winning; returns the resolved params."""
    params = dict(ctx.params)
    config_path = params.pop("config", None)
    explicit = {
        name
        for name in params
        if ctx.get_parameter_source(name) == click.core.ParameterSource.COMMANDLINE
    }
    if config_path:
        params = merge_config(load_config_file(config_path), command, params, explicit)
    return params


def _digest(command: str, params: dict) -> str:
    return config_digest(resolved_config(command, params))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


config_option = click.option("--config", type=click.Path(), default=None,
                             help="TOML config file; flags override its values.")


@click.group()
@click.option("--server", envvar="CDHARNESS_SERVER", default=None,
              help="URL of a running service; default runs it in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Causal-discovery data factory and evaluation harness."""
    ctx.obj = ServiceClient(server)


@main.command()
@click.argument("network")
@click.option("--rows", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Output CSV path.")
@config_option
@click.pass_context
def sample(ctx, network, rows, seed, out, config) -> None:
    """Sample an observational dataset from a Bayesian network."""
    params = _resolve(ctx, "sample")
    client: ServiceClient = ctx.obj
    payload = {**_network_payload(network), "rows": params["rows"], "seed": params["seed"]}
    result = client.post("/sample", payload)
    out_path = Path(params["out"])
    _write(out_path, result["csv"])
    manifest = {
        "config_digest": _digest("sample", params),
        "network": network,
        "rows": params["rows"],
        "seed": params["seed"],
        "columns": result["columns"],
        "name_map": result["name_map"],
        "gold_edges_rendered": result["gold_edges_rendered"],
        "provenance": result["provenance"],
    }
    _write(out_path.with_suffix(out_path.suffix + ".manifest.json"),
           json.dumps(manifest, indent=2) + "\n")
    click.echo(f"wrote {out_path} ({params['rows']} rows)")


@main.command()
@click.argument("data", type=click.Path(exists=True))
@click.option("--algos", default=DEFAULT_ALGOS, show_default=True,
              help="Comma-separated algorithm names.")
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--max-cond-size", default=3, show_default=True)
@click.option("--prune-threshold", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help="Output base path; writes BASE.txt and BASE.json.")
@config_option
@click.pass_context
def discover(ctx, data, algos, alpha, max_cond_size, prune_threshold, seed, out, config) -> None:
    """Run discovery algorithms on a CSV dataset."""
    params = _resolve(ctx, "discover")
    client: ServiceClient = ctx.obj
    algorithms = [a.strip() for a in str(params["algos"]).split(",") if a.strip()]
    payload = {
        "csv": Path(data).read_text(encoding="utf-8"),
        "algorithms": algorithms,
        "alpha": params["alpha"],
        "max_cond_size": params["max_cond_size"],
        "prune_threshold": params["prune_threshold"],
        "seed": params["seed"],
    }
    result = client.post("/discover", payload)
    if result["failures"]:
        for failure in result["failures"]:
            click.echo(f"warning: {failure['algorithm']} failed: {failure['error']}", err=True)
    if params["out"]:
        base = Path(params["out"])
        _write(base.with_suffix(".txt"), result["text"] + "\n")
        _write(base.with_suffix(".json"), json.dumps(
            {"config_digest": _digest("discover", params), **result}, indent=2) + "\n")
        click.echo(f"wrote {base.with_suffix('.txt')} and {base.with_suffix('.json')}")
    else:
        click.echo(result["text"])


@main.command()
@click.argument("network")
@click.option("--condition", default="original", show_default=True,
              type=click.Choice(["original", "omitted", "permuted", "random_names"]))
@click.option("--count", default=1, show_default=True)
@click.option("--rows", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--omit-k", default=None, type=int, help="Variables to drop (omitted condition).")
@click.option("--no-reorder", is_flag=True, default=False,
              help="Skip the foundational column reordering.")
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@config_option
@click.pass_context
def augment(ctx, network, condition, count, rows, seed, omit_k, no_reorder, out, config) -> None:
    """Generate augmented scenarios and their datasets."""
    params = _resolve(ctx, "augment")
    client: ServiceClient = ctx.obj
    payload = {
        **_network_payload(network),
        "condition": params["condition"],
        "count": params["count"],
        "rows": params["rows"],
        "seed": params["seed"],
        "reorder": not params["no_reorder"],
        "omit_k": params["omit_k"],
    }
    result = client.post("/augment", payload)
    out_dir = Path(params["out"])
    (out_dir / "datasets").mkdir(parents=True, exist_ok=True)
    digest = _digest("augment", params)
    lines = []
    for item in result["scenarios"]:
        record = item["record"]
        csv_path = out_dir / "datasets" / f"{record['id']}.csv"
        _write(csv_path, item["dataset_csv"])
        record["dataset_path"] = str(csv_path.relative_to(out_dir))
        record["config_digest"] = digest
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    _write(out_dir / "scenarios.jsonl", "".join(line + "\n" for line in lines))
    click.echo(f"wrote {len(lines)} scenarios under {out_dir}")


@main.command(name="gen-sft")
@click.argument("scenarios", type=click.Path(exists=True), required=False)
@click.option("--network", default=None, help="Corpus mode: source network.")
@click.option("--with-algo/--no-algo", default=True, show_default=True)
@click.option("--rows-shown", default=50, show_default=True)
@click.option("--algos", default=DEFAULT_ALGOS, show_default=True)
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--algo-rows", default=None, type=int,
              help="Rows visible to the algorithms (default: all).")
@click.option("--rows", default=200, show_default=True, help="Corpus mode: dataset rows.")
@click.option("--conditions", default="original,omitted,permuted", show_default=True)
@click.option("--split", default=None, help="Corpus mode: TRAIN:TEST counts per condition.")
@click.option("--train-seed-start", default=0, show_default=True)
@click.option("--test-seed-start", default=1_000_000, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@config_option
@click.pass_context
def gen_sft(ctx, scenarios, network, with_algo, rows_shown, algos, alpha, algo_rows,
            rows, conditions, split, train_seed_start, test_seed_start, out, config) -> None:
    """Build instruction/target instances from scenarios or end to end.

    With a SCENARIOS manifest, instances are built from its records; with
    --network and --split, train/test corpora are generated directly.
    """
    params = _resolve(ctx, "gen_sft")
    client: ServiceClient = ctx.obj
    algorithms = [a.strip() for a in str(params["algos"]).split(",") if a.strip()]
    digest = _digest("gen_sft", params)
    out_path = Path(params["out"])

    if scenarios is not None:
        manifest_dir = Path(scenarios).parent
        items = []
        for line in Path(scenarios).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if "dataset_csv" in record:
                csv_text = record["dataset_csv"]
            elif "dataset_path" in record:
                csv_text = (manifest_dir / record["dataset_path"]).read_text(encoding="utf-8")
            else:
                _fail(f"scenario {record.get('id')} has neither dataset_csv nor dataset_path")
            items.append({"record": record, "dataset_csv": csv_text})
        payload = {
            "scenarios": items,
            "rows_shown": params["rows_shown"],
            "with_algo": params["with_algo"],
            "algorithms": algorithms,
            "alpha": params["alpha"],
            "algo_rows": params["algo_rows"],
        }
        result = client.post("/sft/instances", payload)
        _write(out_path, _stamp_jsonl(result["jsonl"], digest))
        click.echo(f"wrote {result['count']} instances to {out_path}")
        return

    if not params["network"]:
        _fail("provide a SCENARIOS manifest or --network for corpus mode")
    train_count, test_count = _parse_split(params["split"])
    payload = {
        **_network_payload(params["network"]),
        "conditions": [c.strip() for c in str(params["conditions"]).split(",") if c.strip()],
        "count_per_condition": train_count,
        "test_count_per_condition": test_count,
        "rows": params["rows"],
        "rows_shown": params["rows_shown"],
        "with_algo": params["with_algo"],
        "algo_rows": params["algo_rows"],
        "algorithms": algorithms,
        "alpha": params["alpha"],
        "train_seed_start": params["train_seed_start"],
        "test_seed_start": params["test_seed_start"],
    }
    result = client.post("/sft/corpus", payload)
    train_path = out_path.with_suffix(".train.jsonl")
    test_path = out_path.with_suffix(".test.jsonl")
    _write(train_path, _stamp_jsonl(result["train_jsonl"], digest))
    _write(test_path, _stamp_jsonl(result["test_jsonl"], digest))
    click.echo(
        f"wrote {result['train_count']} train -> {train_path}, "
        f"{result['test_count']} test -> {test_path}"
    )


def _parse_split(split: str | None) -> tuple[int, int]:
    if split is None:
        return 5, 5
    try:
        train_s, test_s = split.split(":")
        return int(train_s), int(test_s)
    except ValueError:
        _fail(f"--split must look like TRAIN:TEST, got {split!r}")
        raise AssertionError  # unreachable


def _stamp_jsonl(jsonl: str, digest: str) -> str:
    stamped = []
    for line in jsonl.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        record.setdefault("meta", {})["config_digest"] = digest
        stamped.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    return "".join(line + "\n" for line in stamped)


@main.command()
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--endpoint-url", required=True, help="Chat-completions base URL.")
@click.option("--model", required=True)
@click.option("--api-key-env", default=None, help="Env var holding the API key.")
@click.option("--temperature", default=0.0, show_default=True)
@click.option("--max-tokens", default=2048, show_default=True)
@click.option("--timeout", default=60.0, show_default=True)
@click.option("--max-retries", default=3, show_default=True)
@click.option("--concurrency", default=4, show_default=True)
@click.option("--with-algo/--no-algo", default=True, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@config_option
@click.pass_context
def bench(ctx, corpus, endpoint_url, model, api_key_env, temperature, max_tokens,
          timeout, max_retries, concurrency, with_algo, out, config) -> None:
    """Benchmark a chat endpoint on a corpus; exits 3 if >10% of calls fail."""
    params = _resolve(ctx, "bench")
    client: ServiceClient = ctx.obj
    payload = {
        "jsonl": Path(corpus).read_text(encoding="utf-8"),
        "with_algo": params["with_algo"],
        "endpoint": {
            "base_url": params["endpoint_url"],
            "model": params["model"],
            "api_key_env": params["api_key_env"],
            "temperature": params["temperature"],
            "max_tokens": params["max_tokens"],
            "timeout": params["timeout"],
            "max_retries": params["max_retries"],
            "concurrency_cap": params["concurrency"],
        },
    }
    result = client.post("/bench", payload)
    record = {"config_digest": _digest("bench", params), **result["run"]}
    _write(Path(params["out"]), json.dumps(record, ensure_ascii=False, indent=2) + "\n")
    rate = result["success_rate"]
    click.echo(f"benchmarked {model}: success rate {rate:.1%} -> {params['out']}")
    if rate < BENCH_SUCCESS_THRESHOLD:
        sys.exit(EXIT_BENCH_DEGRADED)


@main.command(name="eval")
@click.argument("results", type=click.Path(exists=True))
@click.option("--gold-manifest", type=click.Path(exists=True), required=True,
              help="The corpus JSONL holding the gold targets.")
@click.option("--group-by", default="model,dataset,condition", show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@config_option
@click.pass_context
def eval_cmd(ctx, results, gold_manifest, group_by, out, config) -> None:
    """Score benchmark completions (or an answers JSONL) against gold."""
    params = _resolve(ctx, "eval")
    client: ServiceClient = ctx.obj
    text = Path(results).read_text(encoding="utf-8")
    payload = {
        "corpus_jsonl": Path(params["gold_manifest"]).read_text(encoding="utf-8"),
        "group_by": [g.strip() for g in str(params["group_by"]).split(",") if g.strip()],
    }
    parsed = _read_results(text)
    payload.update(parsed)
    result = client.post("/eval/run", payload)
    click.echo(result["table"])
    click.echo("")
    click.echo(result["condition_table"])
    if result["n_failures"]:
        click.echo(f"note: {result['n_failures']} failed instances were not scored", err=True)
    if params["out"]:
        out_dir = Path(params["out"])
        digest = _digest("eval", params)
        _write(out_dir / "summary.csv", result["csv"])
        _write(out_dir / "summary.txt", result["table"] + "\n")
        _write(out_dir / "condition_table.txt", result["condition_table"] + "\n")
        _write(
            out_dir / "reports.jsonl",
            "".join(
                json.dumps({"config_digest": digest, **report}, ensure_ascii=False) + "\n"
                for report in result["reports"]
            ),
        )
        click.echo(f"wrote evaluation artifacts under {out_dir}")


def _read_results(text: str) -> dict:
    """A results file is either a benchrun JSON object or answers JSONL."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            record = json.loads(stripped)
        except json.JSONDecodeError:
            record = None
        if record is not None and "completions" in record:
            return {"benchrun": record}
    answers = []
    for i, line in enumerate(stripped.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            _fail(f"results line {i} is neither a benchrun nor an answer record")
        answers.append({
            "instance_id": record["instance_id"],
            "text": record["text"],
            "model": record.get("model", "answers"),
        })
    return {"answers": answers}


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8800, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the harness service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command(name="stub-llm")
@click.option("--mode", default="no-edges", show_default=True,
              help="gold | no-edges | fixed:<text>")
@click.option("--corpus", type=click.Path(exists=True), default=None,
              help="Corpus JSONL (required for gold mode).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8801, show_default=True)
def stub_llm(mode: str, corpus: str | None, host: str, port: int) -> None:
    """Run a deterministic stand-in chat endpoint."""
    import uvicorn

    from .sftgen import read_jsonl
    from .stubserver import make_stub_app

    instances = read_jsonl(corpus) if corpus else None
    uvicorn.run(make_stub_app(mode, instances), host=host, port=port)


if __name__ == "__main__":
    main()
