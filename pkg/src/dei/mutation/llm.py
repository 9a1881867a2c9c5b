"""Model-backed operator speaking the chat-completions HTTP shape.

The operator owns prompt construction, program extraction, and the retry
loop; the backend only turns one request dict into one response string.
That split is what makes record/replay exact: a replayed run feeds the
same strings through the same extraction path.
"""

from __future__ import annotations

import os
import re
from dataclasses import asdict, dataclass
from typing import Protocol

import httpx

from ..redcode import (
    DEFAULT_CORE_SIZE,
    DEFAULT_MAX_WARRIOR_LENGTH,
    RedcodeSyntaxError,
    Warrior,
    parse,
)
from .base import (
    MODE_MUTATE,
    MODE_NEW,
    MutationOperator,
    OperatorFailure,
    PromptContext,
    require_mode,
)
from .prompts import PromptTemplates, build_prompt


class BackendError(RuntimeError):
    """One request/response exchange failed (transport, HTTP, or schema)."""


class ChatBackend(Protocol):
    def complete(self, request: dict) -> str: ...


@dataclass(frozen=True)
class LlmEndpointConfig:
    base_url: str
    model_name: str
    api_key_env: str | None = None
    temperature: float = 1.0
    max_retries: int = 3
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("base_url must be non-empty")
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LlmEndpointConfig":
        return cls(**data)


_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def extract_program(
    text: str,
    name: str,
    core_size: int = DEFAULT_CORE_SIZE,
    max_warrior_length: int = DEFAULT_MAX_WARRIOR_LENGTH,
    origin: str | None = None,
) -> Warrior:
    """Pull one parseable program out of a model response.

    Fenced code blocks are tried in order and the first that assembles wins;
    a response without fences is parsed whole. Raises RedcodeSyntaxError
    (the last one seen) when nothing assembles.
    """
    blocks = _FENCE.findall(text)
    candidates = blocks if blocks else [text]
    last: RedcodeSyntaxError | None = None
    for candidate in candidates:
        try:
            return parse(
                candidate,
                name=name,
                core_size=core_size,
                max_warrior_length=max_warrior_length,
                origin=origin,
            )
        except RedcodeSyntaxError as err:
            last = err
    assert last is not None
    raise last


class HttpChatBackend:
    """POSTs {model, messages, ...} to <base_url>/chat/completions.

    A shared httpx.Client is thread-safe, so one backend may serve several
    in-process nodes concurrently.
    """

    def __init__(self, config: LlmEndpointConfig, client: httpx.Client | None = None):
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)

    def complete(self, request: dict) -> str:
        headers = {}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env)
            if not key:
                raise BackendError(
                    f"API key environment variable {self.config.api_key_env} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        try:
            response = self._client.post(
                url, json=request, headers=headers, timeout=self.config.timeout
            )
            response.raise_for_status()
            data = response.json()
        except httpx.HTTPError as err:
            raise BackendError(f"chat request failed: {err}") from err
        except ValueError as err:
            raise BackendError(f"chat response is not JSON: {err}") from err
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as err:
            raise BackendError(f"chat response missing choices[0].message.content") from err
        if not isinstance(content, str):
            raise BackendError("chat response content is not text")
        return content


class LlmOperator(MutationOperator):
    """Chat-backed operator with parse-guided retries.

    Every attempt (including retries after invalid output) is one HTTP
    exchange; a failed call surfaces as OperatorFailure so the caller can
    count it against the budget and move on.
    """

    def __init__(
        self,
        config: LlmEndpointConfig,
        backend: ChatBackend | None = None,
        templates: PromptTemplates | None = None,
        core_size: int = DEFAULT_CORE_SIZE,
        max_warrior_length: int = DEFAULT_MAX_WARRIOR_LENGTH,
    ):
        self.config = config
        self.backend: ChatBackend = backend or HttpChatBackend(config)
        self.templates = templates
        self.core_size = core_size
        self.max_warrior_length = max_warrior_length

    @property
    def identity(self) -> str:
        return f"llm:{self.config.model_name}"

    def generate(self, ctx: PromptContext, seed: int) -> Warrior:
        require_mode(ctx, MODE_NEW)
        return self._call(ctx, seed, name=f"g{seed & 0xFFFFFFFF:08x}")

    def mutate(self, ctx: PromptContext, seed: int) -> Warrior:
        require_mode(ctx, MODE_MUTATE)
        assert ctx.parent is not None
        return self._call(ctx, seed, name=ctx.parent.name)

    def _call(self, ctx: PromptContext, seed: int, name: str) -> Warrior:
        messages = [{"role": "user", "content": build_prompt(ctx, self.templates)}]
        attempts: list[str] = []
        for _ in range(self.config.max_retries + 1):
            request = {
                "model": self.config.model_name,
                "temperature": self.config.temperature,
                "seed": seed,
                "messages": list(messages),
            }
            try:
                text = self.backend.complete(request)
            except BackendError as err:
                attempts.append(f"backend: {err}")
                continue
            try:
                return extract_program(
                    text,
                    name=name,
                    core_size=self.core_size,
                    max_warrior_length=self.max_warrior_length,
                    origin=self.identity,
                )
            except RedcodeSyntaxError as err:
                attempts.append(f"parse: {err}")
                messages = messages + [
                    {"role": "assistant", "content": text},
                    {
                        "role": "user",
                        "content": (
                            f"That program failed to assemble: {err}. "
                            "Reply with one corrected Redcode program in a single fenced code block."
                        ),
                    },
                ]
        raise OperatorFailure(
            f"{self.identity} produced no parseable program in "
            f"{self.config.max_retries + 1} attempts",
            attempts,
        )
