"""Prompt assembly from versioned template files.

Templates live as data files (not code) so experiments can swap wording
without touching the package. Placeholders: {rules}, {parent_code},
{fitness}, {tsp}, {mc}.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..redcode import serialize
from .base import MODE_NEW, PromptContext

TEMPLATE_VERSION = "v1"


def _read_builtin(stem: str) -> str:
    path = resources.files("dei.mutation") / "templates" / f"{stem}.{TEMPLATE_VERSION}.txt"
    return path.read_text(encoding="utf-8")


@dataclass(frozen=True)
class PromptTemplates:
    new: str
    mutate: str
    version: str

    @classmethod
    def builtin(cls) -> "PromptTemplates":
        return cls(
            new=_read_builtin("new"),
            mutate=_read_builtin("mutate"),
            version=f"builtin-{TEMPLATE_VERSION}",
        )

    @classmethod
    def from_dir(cls, directory: str) -> "PromptTemplates":
        def read(stem: str) -> str:
            with open(os.path.join(directory, f"{stem}.txt"), encoding="utf-8") as fh:
                return fh.read()

        return cls(new=read("new"), mutate=read("mutate"), version=f"dir:{directory}")


@lru_cache(maxsize=1)
def default_templates() -> PromptTemplates:
    return PromptTemplates.builtin()


@lru_cache(maxsize=1)
def default_rules() -> str:
    return _read_builtin("rules")


def build_prompt(ctx: PromptContext, templates: PromptTemplates | None = None) -> str:
    templates = templates or default_templates()
    if ctx.mode == MODE_NEW:
        return templates.new.format(rules=ctx.rules_digest)
    assert ctx.parent is not None and ctx.parent_bc is not None
    return templates.mutate.format(
        rules=ctx.rules_digest,
        parent_code=serialize(ctx.parent).rstrip("\n"),
        fitness=str(ctx.parent_fitness),
        tsp=str(ctx.parent_bc.tsp),
        mc=str(ctx.parent_bc.mc),
    )
