"""HTTP client for an out-of-process policy server.

Wire contract (JSON bodies):

    POST /generate {problem_id, prompt, n, temperature, max_new_tokens, seed} -> {responses: [str]}
    POST /update   {problem_id, rollouts: [str], advantages: [float], learning_rate, max_steps} -> {losses: [float]}
    POST /eval     {prompts: [str], temperature: 0, max_new_tokens} -> {responses: [str]}

Every request carries an ``Idempotency-Key`` derived from its body, so a
retried request is recognisable server-side. Transport errors, 429 and 5xx
are retried with exponential backoff; other 4xx are contract errors.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import httpx

from .backend import BackendError, BackendTransportError, Capabilities
from .data import Problem

TOKEN_ENV = "SGAC_REMOTE_TOKEN"
DEFAULT_TEMPLATE = "{statement}\nPlease reason step by step, and put your final answer within \\boxed{{}}."


@dataclass
class RemoteBackend:
    base_url: str
    token: Optional[str] = None
    timeout: float = 600.0
    attempts: int = 3
    backoff: float = 1.0
    prompt_template: str = DEFAULT_TEMPLATE
    transport: Optional[httpx.BaseTransport] = None
    sleep: Callable[[float], None] = time.sleep
    capabilities: Capabilities = field(default=Capabilities(supports_update=True, deterministic_eval=True))

    def __post_init__(self):
        if self.token is None:
            self.token = os.environ.get(TOKEN_ENV)
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        self._client = httpx.Client(
            base_url=self.base_url.rstrip("/"), timeout=self.timeout, headers=headers, transport=self.transport
        )

    def close(self) -> None:
        self._client.close()

    def prompt(self, problem: Problem) -> str:
        return self.prompt_template.format(statement=problem.statement)

    def _post(self, path: str, payload: dict) -> dict:
        body = json.dumps(payload, sort_keys=True)
        key = hashlib.sha256(f"{path}\n{body}".encode("utf-8")).hexdigest()
        last: Exception | None = None
        for attempt in range(self.attempts):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(
                    path, content=body, headers={"Content-Type": "application/json", "Idempotency-Key": key}
                )
            except httpx.TransportError as exc:
                last = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = BackendTransportError(f"{path}: HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise BackendError(f"{path}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendError(f"{path}: response is not JSON") from exc
        raise BackendTransportError(f"{path}: giving up after {self.attempts} attempts: {last}")

    @staticmethod
    def _field(data: dict, name: str, n: int | None, kind) -> list:
        values = data.get(name) if isinstance(data, dict) else None
        if not isinstance(values, list) or not all(isinstance(v, kind) and not isinstance(v, bool) for v in values):
            raise BackendError(f"malformed response: {name!r} must be a list of {getattr(kind, '__name__', 'numbers')}")
        if n is not None and len(values) != n:
            raise BackendError(f"malformed response: expected {n} {name}, got {len(values)}")
        return values

    def generate(self, problem: Problem, n: int, temperature: float, max_new_tokens: int, seed: int) -> list[str]:
        data = self._post(
            "/generate",
            {
                "problem_id": problem.id,
                "prompt": self.prompt(problem),
                "n": n,
                "temperature": temperature,
                "max_new_tokens": max_new_tokens,
                "seed": seed,
            },
        )
        return self._field(data, "responses", n, str)

    def update(self, problem: Problem, responses: Sequence[str], advantages: Sequence[float], learning_rate: float, max_steps: int) -> list[float]:
        data = self._post(
            "/update",
            {
                "problem_id": problem.id,
                "rollouts": list(responses),
                "advantages": [float(a) for a in advantages],
                "learning_rate": learning_rate,
                "max_steps": max_steps,
            },
        )
        return [float(x) for x in self._field(data, "losses", max_steps, (int, float))]

    def apply_update(self, problem: Problem, rollouts, advantages: Sequence[float], learning_rate: float) -> float:
        responses = [r if isinstance(r, str) else r.response for r in rollouts]
        return self.update(problem, responses, advantages, learning_rate, max_steps=1)[0]

    def generate_greedy(self, problems: Sequence[Problem], max_new_tokens: int) -> list[str]:
        data = self._post(
            "/eval",
            {"prompts": [self.prompt(p) for p in problems], "temperature": 0, "max_new_tokens": max_new_tokens},
        )
        return self._field(data, "responses", len(problems), str)
