"""Benchmarking chat-completions endpoints on generated corpora.

The wire format is the widely adopted chat-completions JSON shape: POST
``{base_url}/chat/completions`` with ``model``, ``messages``,
``temperature`` and ``max_tokens``; the completion is read from
``choices[0].message.content``. API keys come from the environment only.
"""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import httpx

from .errors import (
    AuthError,
    MalformedResponseError,
    RetryExhaustedError,
    TimeoutError,
    ValidationError,
)
from .sftgen import SftInstance, audit_instance

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str | None = None
    temperature: float = 0.0
    max_tokens: int = 2048
    timeout: float = 60.0
    max_retries: int = 3
    concurrency_cap: int = 4

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.concurrency_cap < 1:
            raise ValidationError("concurrency_cap must be >= 1")


@dataclass(frozen=True)
class BenchCompletion:
    instance_index: int
    instance_id: str
    text: str
    latency_s: float
    usage: dict
    truncated: bool = False


@dataclass(frozen=True)
class BenchFailure:
    instance_index: int
    instance_id: str
    error: str


@dataclass(frozen=True)
class BenchRun:
    model: str
    with_algo: bool
    completions: list[BenchCompletion]
    failures: list[BenchFailure]

    @property
    def n_instances(self) -> int:
        return len(self.completions) + len(self.failures)

    def success_rate(self) -> float:
        return len(self.completions) / self.n_instances if self.n_instances else 0.0


class ChatClient:
    """Synchronous chat-completions client with bounded retries.

    ``transport`` and ``sleep`` are injection points for tests; production
    use leaves them at their defaults.
    """

    def __init__(
        self,
        config: EndpointConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.config = config
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._client = httpx.Client(transport=transport, timeout=config.timeout)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ChatClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env)
            if not key:
                raise AuthError(
                    f"environment variable {self.config.api_key_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def chat_complete(self, system: str, user: str) -> str:
        """Send one [system, user] exchange; return the first choice's text.

        Retries 429 and 5xx responses with exponential backoff (base 1s,
        factor 2, 10% jitter) up to ``max_retries`` times.
        """
        return self.complete(system, user)[0]

    def complete(self, system: str, user: str) -> tuple[str, dict, bool]:
        """Like :meth:`chat_complete` but also returns the usage object and
        whether the completion hit the token limit."""
        headers = self._headers()  # fails before any network call
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        attempt = 0
        while True:
            try:
                response = self._client.post(url, json=payload, headers=headers)
            except httpx.TimeoutException as exc:
                raise TimeoutError(f"no answer within {self.config.timeout}s: {exc}") from exc
            except httpx.HTTPError as exc:
                raise MalformedResponseError(f"transport failure: {exc}") from exc
            if response.status_code in RETRYABLE_STATUS:
                if attempt >= self.config.max_retries:
                    raise RetryExhaustedError(
                        f"gave up after {attempt} retries; last status {response.status_code}"
                    )
                delay = (2.0 ** attempt) * (1.0 + 0.1 * self._rng.random())
                self._sleep(delay)
                attempt += 1
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials ({response.status_code})")
            if response.status_code != 200:
                raise MalformedResponseError(
                    f"unexpected status {response.status_code}: {response.text[:200]}"
                )
            return _extract_content(response)


def _extract_content(response: httpx.Response) -> tuple[str, dict, bool]:
    try:
        body = response.json()
        choice = body["choices"][0]
        content = choice["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"cannot read completion: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedResponseError("completion content is not text")
    usage = body.get("usage") if isinstance(body.get("usage"), dict) else {}
    truncated = choice.get("finish_reason") == "length" if isinstance(choice, dict) else False
    return content, usage, truncated


def chat_complete(
    config: EndpointConfig,
    system: str,
    user: str,
    transport: httpx.BaseTransport | None = None,
) -> str:
    with ChatClient(config, transport=transport) as client:
        return client.chat_complete(system, user)


def run_benchmark(
    instances: Sequence[SftInstance],
    config: EndpointConfig,
    with_algo: bool,
    transport: httpx.BaseTransport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> BenchRun:
    """Query the endpoint once per instance under the concurrency cap.

    Single-instance failures become failure records; the run never aborts.
    Results are ordered by corpus position. Every outgoing payload is
    audited against metadata leaks before it is sent.
    """
    for instance in instances:
        if bool(instance.meta.get("with_algo")) != bool(with_algo):
            raise ValidationError(
                f"instance {instance.meta.get('instance_id')} was built with "
                f"with_algo={instance.meta.get('with_algo')}"
            )
        problems = audit_instance(instance)
        if problems:
            raise ValidationError(
                f"refusing to send leaking instance {instance.meta.get('instance_id')}: "
                + "; ".join(problems)
            )

    client = ChatClient(config, transport=transport, sleep=sleep)
    results: list[BenchCompletion | BenchFailure] = [None] * len(instances)  # type: ignore[list-item]

    def work(index: int) -> None:
        instance = instances[index]
        instance_id = instance.meta.get("instance_id", str(index))
        start = time.perf_counter()
        try:
            text, usage, truncated = client.complete(instance.system, instance.user)
        except Exception as exc:
            results[index] = BenchFailure(
                instance_index=index,
                instance_id=instance_id,
                error=f"{type(exc).__name__}: {exc}",
            )
            return
        results[index] = BenchCompletion(
            instance_index=index,
            instance_id=instance_id,
            text=text,
            latency_s=round(time.perf_counter() - start, 6),
            usage=usage,
            truncated=truncated,
        )

    try:
        with ThreadPoolExecutor(max_workers=config.concurrency_cap) as pool:
            list(pool.map(work, range(len(instances))))
    finally:
        client.close()

    completions = [r for r in results if isinstance(r, BenchCompletion)]
    failures = [r for r in results if isinstance(r, BenchFailure)]
    return BenchRun(
        model=config.model, with_algo=with_algo, completions=completions, failures=failures
    )


def benchrun_to_record(run: BenchRun) -> dict:
    return {
        "model": run.model,
        "with_algo": run.with_algo,
        "completions": [
            {
                "instance_index": c.instance_index,
                "instance_id": c.instance_id,
                "text": c.text,
                "latency_s": c.latency_s,
                "usage": c.usage,
                "truncated": c.truncated,
            }
            for c in run.completions
        ],
        "failures": [
            {
                "instance_index": f.instance_index,
                "instance_id": f.instance_id,
                "error": f.error,
            }
            for f in run.failures
        ],
    }


def benchrun_from_record(record: dict) -> BenchRun:
    return BenchRun(
        model=record["model"],
        with_algo=record["with_algo"],
        completions=[
            BenchCompletion(
                instance_index=c["instance_index"],
                instance_id=c["instance_id"],
                text=c["text"],
                latency_s=c.get("latency_s", 0.0),
                usage=c.get("usage", {}),
                truncated=c.get("truncated", False),
            )
            for c in record["completions"]
        ],
        failures=[
            BenchFailure(
                instance_index=f["instance_index"],
                instance_id=f["instance_id"],
                error=f["error"],
            )
            for f in record["failures"]
        ],
    )
