"""Operator interface: produce a fresh warrior or a variant of an existing one."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from ..mars import BehavioralCharacteristic
from ..redcode import Warrior

MODE_NEW = "new"
MODE_MUTATE = "mutate"


class OperatorFailure(RuntimeError):
    """Raised when an operator cannot deliver a parseable warrior.

    Carries the attempt-by-attempt error log so failed iterations can be
    recorded against the call budget with a useful diagnosis.
    """

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        self.attempts = list(attempts or [])


@dataclass(frozen=True)
class PromptContext:
    """Everything an operator may condition on for one call.

    `mutate` mode requires the parent program plus the score and behavior
    coordinates it earned, so the operator can be told what it is improving.
    """

    mode: str
    rules_digest: str
    parent: Warrior | None = None
    parent_fitness: float | None = None
    parent_bc: BehavioralCharacteristic | None = None

    def __post_init__(self) -> None:
        if self.mode not in (MODE_NEW, MODE_MUTATE):
            raise ValueError(f"unknown prompt mode {self.mode!r}")
        if self.mode == MODE_MUTATE:
            missing = [
                field
                for field, value in (
                    ("parent", self.parent),
                    ("parent_fitness", self.parent_fitness),
                    ("parent_bc", self.parent_bc),
                )
                if value is None
            ]
            if missing:
                raise ValueError(f"mutate context missing {', '.join(missing)}")


class MutationOperator(ABC):
    """A source of warriors. Implementations must be safe to call repeatedly
    with the same (ctx, seed) and, for offline operators, return the same
    result each time."""

    @property
    @abstractmethod
    def identity(self) -> str:
        """Stable provenance tag, e.g. 'mock:balanced' or 'llm:gpt-x'."""

    @abstractmethod
    def generate(self, ctx: PromptContext, seed: int) -> Warrior:
        """Produce a fresh warrior. Requires ctx.mode == 'new'."""

    @abstractmethod
    def mutate(self, ctx: PromptContext, seed: int) -> Warrior:
        """Produce a variant of ctx.parent. Requires ctx.mode == 'mutate'."""


def require_mode(ctx: PromptContext, mode: str) -> None:
    if ctx.mode != mode:
        raise ValueError(f"context mode {ctx.mode!r} does not match call {mode!r}")
