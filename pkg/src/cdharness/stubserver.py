"""Deterministic stand-in chat-completions endpoints.

Useful for pipeline smoke tests and demos without any real model behind
the wire: the ``gold`` mode answers every prompt with the matching
corpus instance's target (looked up by user-message content), ``no-edges``
always answers with an empty graph, and ``fixed:<text>`` echoes a canned
string.
"""

from __future__ import annotations

import threading
import time

import uvicorn
from fastapi import FastAPI
from pydantic import BaseModel

from .sftgen import ANSWER_LABEL, EMPTY_ANSWER_BODY, SftInstance


class ChatMessage(BaseModel):
    role: str
    content: str


class ChatRequest(BaseModel):
    model: str
    messages: list[ChatMessage]
    temperature: float = 0.0
    max_tokens: int | None = None


def make_stub_app(mode: str, instances: list[SftInstance] | None = None) -> FastAPI:
    app = FastAPI(title="cdharness stub endpoint")

    answers: dict[str, str] = {}
    if mode == "gold":
        if not instances:
            raise ValueError("gold mode needs the corpus instances")
        answers = {i.user: i.assistant for i in instances}
    elif mode == "no-edges":
        pass
    elif mode.startswith("fixed:"):
        pass
    else:
        raise ValueError(f"unknown stub mode {mode!r}")

    @app.post("/chat/completions")
    def complete(request: ChatRequest):
        user = next((m.content for m in request.messages if m.role == "user"), "")
        if mode == "gold":
            text = answers.get(user, ANSWER_LABEL + "\n" + EMPTY_ANSWER_BODY)
        elif mode == "no-edges":
            text = ANSWER_LABEL + "\n" + EMPTY_ANSWER_BODY
        else:
            text = mode[len("fixed:"):]
        return {
            "id": "stub",
            "object": "chat.completion",
            "model": request.model,
            "choices": [
                {"index": 0, "message": {"role": "assistant", "content": text},
                 "finish_reason": "stop"}
            ],
            "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
        }

    return app


class StubServer:
    """A stub endpoint on 127.0.0.1, running in a background thread."""

    def __init__(self, app: FastAPI, port: int = 0):
        config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("stub server did not start")
            time.sleep(0.01)
        server = self._server.servers[0]
        port = server.sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)
