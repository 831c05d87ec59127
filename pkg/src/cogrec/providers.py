"""Pluggable text-generation and scoring providers.

Providers abstract the hosted models the engine can call: anything with an
``identity`` and a ``generate`` method works. Deterministic providers must
return identical text for identical (prompt, parameters); remote ones may
not. The HTTP implementations speak a chat-completion-style contract and are
entirely optional -- the engine runs offline without them.
"""

from __future__ import annotations

import logging
import os
from typing import Optional, Protocol, Sequence, runtime_checkable

import requests

from .errors import ProviderError

log = logging.getLogger(__name__)


@runtime_checkable
class GenerationProvider(Protocol):
    identity: str

    def generate(self, prompt: str, *, temperature: float = 0.7,
                 max_tokens: int = 500) -> str: ...


@runtime_checkable
class CrossEncoderProvider(Protocol):
    """Scores (query, passage) pairs; higher = more relevant."""

    identity: str

    def score(self, query: str, passages: Sequence[str]) -> list[float]: ...


class HttpChatProvider:
    """POSTs {model, messages, temperature, max_tokens} to a chat endpoint.

    Bearer token is read from the environment variable named by
    ``token_env`` at call time; the endpoint URL comes from configuration.
    """

    def __init__(self, url: str, model: str = "gpt-3.5-turbo",
                 token_env: str = "GENERATION_PROVIDER_TOKEN",
                 timeout: float = 30.0):
        self.url = url
        self.model = model
        self.token_env = token_env
        self.timeout = timeout
        self.identity = f"http:{model}@{url}"

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def generate(self, prompt: str, *, temperature: float = 0.7,
                 max_tokens: int = 500) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        try:
            resp = requests.post(self.url, json=body, headers=self._headers(),
                                 timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except ProviderError:
            raise
        except Exception as exc:
            raise ProviderError(f"chat provider call failed: {exc}") from exc


class HttpCrossEncoderProvider:
    """POSTs {query, passages} and expects {"scores": [...]}."""

    def __init__(self, url: str, token_env: str = "GENERATION_PROVIDER_TOKEN",
                 timeout: float = 30.0):
        self.url = url
        self.token_env = token_env
        self.timeout = timeout
        self.identity = f"cross-encoder@{url}"

    def score(self, query: str, passages: Sequence[str]) -> list[float]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = requests.post(self.url, json={"query": query,
                                                 "passages": list(passages)},
                                 headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            scores = resp.json()["scores"]
            if len(scores) != len(passages):
                raise ProviderError("cross-encoder returned wrong score count")
            return [float(s) for s in scores]
        except ProviderError:
            raise
        except Exception as exc:
            raise ProviderError(f"cross-encoder call failed: {exc}") from exc


class StaticProvider:
    """Returns canned responses in order; repeats the last one. Test helper."""

    def __init__(self, responses: Sequence[str], identity: str = "static"):
        if not responses:
            raise ValueError("need at least one canned response")
        self.responses = list(responses)
        self.identity = identity
        self.calls = 0

    def generate(self, prompt: str, *, temperature: float = 0.7,
                 max_tokens: int = 500) -> str:
        idx = min(self.calls, len(self.responses) - 1)
        self.calls += 1
        return self.responses[idx]


def build_provider(url: Optional[str], model: str, token_env: str) -> Optional[GenerationProvider]:
    if not url:
        return None
    return HttpChatProvider(url, model=model, token_env=token_env)
