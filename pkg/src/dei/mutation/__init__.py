"""Pluggable warrior-producing operators: offline biased mocks and a chat-API client."""

from .base import (
    MODE_MUTATE,
    MODE_NEW,
    MutationOperator,
    OperatorFailure,
    PromptContext,
)
from .llm import (
    BackendError,
    ChatBackend,
    HttpChatBackend,
    LlmEndpointConfig,
    LlmOperator,
    extract_program,
)
from .mock import PROFILES, MockOperator, bias_profile
from .prompts import (
    PromptTemplates,
    build_prompt,
    default_rules,
    default_templates,
)
from .recording import RecordingBackend, ReplayBackend

__all__ = [
    "BackendError",
    "ChatBackend",
    "HttpChatBackend",
    "LlmEndpointConfig",
    "LlmOperator",
    "MODE_MUTATE",
    "MODE_NEW",
    "MockOperator",
    "MutationOperator",
    "OperatorFailure",
    "PROFILES",
    "PromptContext",
    "PromptTemplates",
    "RecordingBackend",
    "ReplayBackend",
    "bias_profile",
    "build_prompt",
    "default_rules",
    "default_templates",
    "extract_program",
]
