"""A synchronous httpx transport for in-process ASGI apps.

Lets the thin-client CLI speak to the service through the same HTTP
surface whether the service runs remotely or inside the same process.
"""

from __future__ import annotations

import anyio.from_thread
import httpx


class SyncASGITransport(httpx.BaseTransport):
    def __init__(self, app):
        # Unhandled app exceptions surface as 500 responses, matching what a
        # remote deployment of the same app would return.
        self._async_transport = httpx.ASGITransport(app=app, raise_app_exceptions=False)
        self._portal_cm = anyio.from_thread.start_blocking_portal()
        self._portal = self._portal_cm.__enter__()

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def roundtrip() -> httpx.Response:
            async_request = httpx.Request(
                request.method,
                request.url,
                headers=request.headers,
                content=request.content,
            )
            response = await self._async_transport.handle_async_request(async_request)
            body = await response.aread()
            await response.aclose()
            return httpx.Response(
                response.status_code, headers=response.headers, content=body
            )

        return self._portal.call(roundtrip)

    def close(self) -> None:
        self._portal_cm.__exit__(None, None, None)
