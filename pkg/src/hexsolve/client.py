"""Client for the solve service.

By default requests run in-process against the ASGI app, so the CLI
works without a running server; pass a base URL to talk to a remote
instance started with `hexsolve serve`.
"""

from __future__ import annotations

from typing import Optional

import httpx


class ServiceError(Exception):
    def __init__(self, kind: str, message: str, status_code: int):
        super().__init__(message)
        self.kind = kind
        self.status_code = status_code


class ServiceClient:
    def __init__(self, base_url: Optional[str] = None):
        if base_url:
            self._client = httpx.Client(base_url=base_url, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                # the in-process transport import warns about its own future
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app, raise_server_exceptions=False)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code == 200:
            return response.json()
        detail = {}
        try:
            detail = response.json().get("detail", {})
        except Exception:
            pass
        if isinstance(detail, dict) and detail.get("error"):
            raise ServiceError(detail["error"], detail.get("message", ""), response.status_code)
        # pydantic validation errors and anything else count as input problems
        raise ServiceError("input", str(detail or response.text), response.status_code)

    def solve(
        self,
        program: str,
        ebl: str = "informed",
        enum: "str | int" = "all",
        heuristic: str = "lex",
        seed: int = 0,
        propagation: str = "watched",
    ) -> dict:
        return self._post(
            "/solve",
            {
                "program": program,
                "ebl": ebl,
                "enum": enum,
                "heuristic": heuristic,
                "seed": seed,
                "propagation": propagation,
            },
        )

    def generate_partition(self, n: int) -> str:
        return self._post("/generate/partition", {"n": n})["program"]

    def generate_sudoku(self, grid: str) -> str:
        return self._post("/generate/sudoku", {"grid": grid})["program"]
