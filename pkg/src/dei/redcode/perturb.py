"""Deterministic biased perturbation of warriors.

This is the offline stand-in for a model-backed mutation operator: an
OperatorBias table plays the role of a generator's inductive bias, so that
populations driven by different bias tables explore measurably different
parts of the behavior space without any network calls.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .insn import (
    DEFAULT_CORE_SIZE,
    DEFAULT_MAX_WARRIOR_LENGTH,
    Instruction,
    Mode,
    Modifier,
    Opcode,
    Warrior,
)

EDIT_KINDS = ("point", "insert", "delete", "swap")

_BALANCED_OPCODES = {
    Opcode.MOV: 4.0,
    Opcode.ADD: 2.0,
    Opcode.SUB: 1.0,
    Opcode.JMP: 2.0,
    Opcode.SPL: 1.5,
    Opcode.DJN: 1.0,
    Opcode.JMZ: 0.5,
    Opcode.JMN: 0.5,
    Opcode.SEQ: 0.5,
    Opcode.SNE: 0.5,
    Opcode.SLT: 0.25,
    Opcode.MUL: 0.25,
    Opcode.DIV: 0.25,
    Opcode.MOD: 0.25,
    Opcode.DAT: 1.0,
    Opcode.NOP: 0.25,
}


@dataclass(frozen=True)
class OperatorBias:
    """Weights steering random edits and generation.

    `opcode_weights` biases which opcode a point edit or fresh instruction
    draws; `edit_weights` biases the edit kind. The generation-shape knobs
    (length range, value spread) let profiles separate along the code-length
    axis as well as the opcode mix.
    """

    name: str = "balanced"
    opcode_weights: dict[Opcode, float] = field(
        default_factory=lambda: dict(_BALANCED_OPCODES)
    )
    edit_weights: dict[str, float] = field(
        default_factory=lambda: {"point": 4.0, "insert": 2.0, "delete": 1.0, "swap": 1.0}
    )
    gen_length_range: tuple[int, int] = (1, 12)
    value_spread: int = 16

    def __post_init__(self) -> None:
        for kind in self.edit_weights:
            if kind not in EDIT_KINDS:
                raise ValueError(f"unknown edit kind {kind!r}")
        if not any(w > 0 for w in self.opcode_weights.values()):
            raise ValueError("opcode_weights must contain a positive weight")
        if not any(w > 0 for w in self.edit_weights.values()):
            raise ValueError("edit_weights must contain a positive weight")
        lo, hi = self.gen_length_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad generation length range {self.gen_length_range}")


def _weighted_choice(rng: random.Random, table: dict) -> object:
    items = list(table.items())
    total = sum(w for _, w in items)
    x = rng.random() * total
    acc = 0.0
    for key, w in items:
        acc += w
        if x < acc:
            return key
    return items[-1][0]


def _random_value(rng: random.Random, bias: OperatorBias, core_size: int) -> int:
    # small relative offsets dominated by the spread; occasionally far throws
    if rng.random() < 0.9:
        return rng.randint(-bias.value_spread, bias.value_spread) % core_size
    return rng.randrange(core_size)


def _random_instruction(rng: random.Random, bias: OperatorBias, core_size: int) -> Instruction:
    opcode = _weighted_choice(rng, bias.opcode_weights)
    modifier = rng.choice(list(Modifier))
    a_mode = rng.choice(list(Mode))
    b_mode = rng.choice(list(Mode))
    a_value = _random_value(rng, bias, core_size)
    b_value = _random_value(rng, bias, core_size)
    return Instruction(opcode, modifier, a_mode, a_value, b_mode, b_value)


def random_warrior(
    seed: int,
    bias: OperatorBias,
    name: str,
    core_size: int = DEFAULT_CORE_SIZE,
    max_warrior_length: int = DEFAULT_MAX_WARRIOR_LENGTH,
    origin: str | None = None,
) -> Warrior:
    """Draw a fresh warrior from the bias profile; pure in (seed, bias)."""
    rng = random.Random(seed)
    lo, hi = bias.gen_length_range
    length = rng.randint(lo, min(hi, max_warrior_length))
    instructions = tuple(_random_instruction(rng, bias, core_size) for _ in range(length))
    return Warrior(
        name=name,
        instructions=instructions,
        start_offset=rng.randrange(length),
        origin=origin,
    )


def random_perturb(
    warrior: Warrior,
    seed: int,
    bias: OperatorBias,
    core_size: int = DEFAULT_CORE_SIZE,
    max_warrior_length: int = DEFAULT_MAX_WARRIOR_LENGTH,
) -> Warrior:
    """Apply exactly one bias-drawn edit; pure in (warrior, seed, bias).

    Edits that would break the length bounds are re-drawn; if the bias admits
    no legal edit for this program (e.g. delete-only on a one-line warrior)
    the edit falls back to a point edit so the result is always valid.
    """
    rng = random.Random(seed)
    code = list(warrior.instructions)
    start = warrior.start_offset

    kind = None
    for _ in range(16):
        candidate = _weighted_choice(rng, bias.edit_weights)
        if candidate == "delete" and len(code) <= 1:
            continue
        if candidate == "insert" and len(code) >= max_warrior_length:
            continue
        if candidate == "swap" and len(code) < 2:
            continue
        kind = candidate
        break
    if kind is None:
        kind = "point"

    if kind == "point":
        index = rng.randrange(len(code))
        code[index] = _random_instruction(rng, bias, core_size)
    elif kind == "insert":
        index = rng.randint(0, len(code))
        code.insert(index, _random_instruction(rng, bias, core_size))
        if index <= start:
            start += 1
    elif kind == "delete":
        index = rng.randrange(len(code))
        del code[index]
        if index < start:
            start -= 1
        start = min(start, len(code) - 1)
    else:  # swap
        i = rng.randrange(len(code))
        j = rng.randrange(len(code))
        while j == i:
            j = rng.randrange(len(code))
        code[i], code[j] = code[j], code[i]

    return replace(warrior, instructions=tuple(code), start_offset=start)
