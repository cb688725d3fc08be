"""Thin client for the service, in-process by default.

Without a server URL, requests run against the FastAPI app in this process
through the test transport, so the command line works with no server running;
with a URL, the same calls go over HTTP.  JSON carries floats at full
precision in both directions, so results do not depend on the transport.
"""

from __future__ import annotations

import warnings
from typing import Any

import httpx


class ServiceError(Exception):
    """A non-2xx service reply, with its machine-readable code."""

    def __init__(self, status: int, code: str, detail: str) -> None:
        super().__init__(f"[{status}/{code}] {detail}")
        self.status = status
        self.code = code
        self.detail = detail


class ServiceClient:
    def __init__(self, server: str | None = None) -> None:
        if server:
            self._client = httpx.Client(base_url=server, timeout=3600.0)
        else:
            with warnings.catch_warnings():
                # the ASGI test transport import warns about its own future
                warnings.simplefilter("ignore", Warning)
                from fastapi.testclient import TestClient

            from .service.app import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def _check(self, response: httpx.Response) -> dict[str, Any]:
        if response.status_code >= 400:
            try:
                body = response.json()
            except ValueError:
                body = {}
            detail = body.get("detail", response.text)
            code = body.get("code", "")
            if not code:
                # pydantic validation errors arrive as a list of issues
                code = "contract" if response.status_code == 422 else "numerical"
            if not isinstance(detail, str):
                detail = "; ".join(
                    f"{'.'.join(str(p) for p in issue.get('loc', []))}: {issue.get('msg', '')}"
                    for issue in detail
                )
            raise ServiceError(response.status_code, code, detail)
        return response.json()

    def health(self) -> dict[str, Any]:
        return self._check(self._client.get("/health"))

    def alloc(self, payload: dict[str, Any]) -> dict[str, Any]:
        return self._check(self._client.post("/alloc", json=payload))

    def toycase(self, payload: dict[str, Any]) -> dict[str, Any]:
        return self._check(self._client.post("/toycase", json=payload))

    def estimate(self, payload: dict[str, Any]) -> dict[str, Any]:
        return self._check(self._client.post("/estimate", json=payload))

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
