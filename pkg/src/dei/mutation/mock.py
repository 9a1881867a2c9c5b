"""Offline operators driven by bias tables instead of a model.

Each profile plays the role of one model family's inductive bias: profiles
differ in the program motifs they emit, in opcode mix, in program length,
and in addressing spread, so ensembles built from different profiles explore
different behavior-space regions.  Fresh generations mostly instantiate one
of the profile's motif templates with randomized parameters (a model that
favors bombers writes mostly working bombers, not uniform instruction
noise); the rest are unstructured random programs.  Mutations are single
bias-weighted edits of the parent.
"""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Callable

from ..redcode import (
    DEFAULT_CORE_SIZE,
    DEFAULT_MAX_WARRIOR_LENGTH,
    Opcode,
    OperatorBias,
    Warrior,
    parse,
    random_perturb,
    random_warrior,
)
from .base import MODE_MUTATE, MODE_NEW, MutationOperator, PromptContext, require_mode

PROFILES: dict[str, OperatorBias] = {
    # general-purpose mix, mid-length programs
    "balanced": OperatorBias(),
    # short self-copying movers and skippers
    "mover": OperatorBias(
        name="mover",
        opcode_weights={
            Opcode.MOV: 8.0,
            Opcode.JMP: 2.0,
            Opcode.ADD: 1.0,
            Opcode.SEQ: 0.5,
            Opcode.SNE: 0.5,
            Opcode.SPL: 0.5,
            Opcode.DAT: 0.25,
        },
        edit_weights={"point": 6.0, "insert": 1.0, "delete": 1.0, "swap": 1.0},
        gen_length_range=(1, 4),
        value_spread=8,
    ),
    # process-storm replicators
    "splitter": OperatorBias(
        name="splitter",
        opcode_weights={
            Opcode.SPL: 9.0,
            Opcode.MOV: 3.0,
            Opcode.JMP: 1.0,
            Opcode.DJN: 1.0,
            Opcode.DAT: 0.5,
            Opcode.NOP: 0.5,
        },
        gen_length_range=(2, 8),
        value_spread=12,
    ),
    # long bombers laying DAT carpets at wide strides
    "bomber": OperatorBias(
        name="bomber",
        opcode_weights={
            Opcode.DAT: 5.0,
            Opcode.MOV: 4.0,
            Opcode.ADD: 3.0,
            Opcode.JMP: 2.0,
            Opcode.DJN: 1.5,
            Opcode.SUB: 1.0,
        },
        edit_weights={"point": 3.0, "insert": 3.0, "delete": 0.5, "swap": 1.0},
        gen_length_range=(8, 32),
        value_spread=200,
    ),
}


def bias_profile(name: str) -> OperatorBias:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(
            f"unknown bias profile {name!r}; available: {', '.join(sorted(PROFILES))}"
        ) from None


# -- generation motifs --------------------------------------------------------
#
# A motif is a code template with randomized parameters.  Varying the stride
# of a bomber or the length of an imp train moves the program along the
# memory-coverage and time-space axes, so each profile's motif family maps
# out its own region of behavior space.

Motif = Callable[[random.Random], str]


def _imp(rng: random.Random) -> str:
    stride = rng.choice((1, 1, 1, 2, 3, 5, 7))
    return f"MOV $0, ${stride}"


def _imp_train(rng: random.Random) -> str:
    length = rng.randint(2, 4)
    return "\n".join(f"MOV $0, ${length}" for _ in range(length))


def _creeper(rng: random.Random) -> str:
    # copies the cell behind it forward, crawling through the core
    return f"MOV $2, <1\nJMP $-1, #-{rng.randint(2, 9)}\nDAT #9, #9"


def _stone(rng: random.Random) -> str:
    stride = rng.choice((3, 4, 5, 6, 7, 8, 11, 13))
    return f"ADD #{stride}, $3\nMOV $2, @2\nJMP $-2, $0\nDAT #0, #0"


def _rake(rng: random.Random) -> str:
    return f"MOV $2, >1\nJMP $-1, #{rng.randint(2, 9)}\nDAT #0, #0"


def _drip(rng: random.Random) -> str:
    back = rng.randint(3, 40)
    return f"MOV $3, <2\nJMP $-1, $0\nDAT #0, #-{back}\nDAT #0, #0"


def _fork(rng: random.Random) -> str:
    return "SPL $0, $0\nJMP $-1, $0"


def _fan(rng: random.Random) -> str:
    # a process gate feeding imps forward while gnawing backward
    return f"SPL $2, $0\nDJN $0, <-{rng.randint(5, 30)}\nMOV $0, $1"


def _grove(rng: random.Random) -> str:
    stride = rng.choice((97, 211, 339, 653, 1051))
    start = rng.randint(50, 300)
    return (f"SPL $0, $0\nMOV $3, @2\nADD #{stride}, $1\n"
            f"JMP $-3, #{start}\nDAT #0, #0")


def _scan(rng: random.Random) -> str:
    stride = rng.choice((4, 8, 10, 14, 16))
    start = rng.randint(3, 20)
    return (f"ADD #{stride}, $3\nJMZ $-1, @2\nMOV $2, @1\n"
            f"JMP $-3, #{start}\nDAT #0, #0")


def _probe(rng: random.Random) -> str:
    stride = rng.choice((5, 7, 9, 12))
    return (f"ADD #{stride}, $2\nJMN $1, @1\nJMP $-2, #{rng.randint(3, 30)}\n"
            f"MOV $1, @-2\nDAT #0, #0")


MOTIFS: dict[str, tuple[Motif, ...]] = {
    "balanced": (_scan, _probe, _stone, _fork),
    "mover": (_imp, _imp_train, _creeper),
    "splitter": (_fork, _fan, _grove),
    "bomber": (_stone, _rake, _drip),
}

# Dead-code padding appended after a motif.  Padding never executes, but the
# time-space product scales with code length, so each profile's padding band
# pins its programs to a distinct slice of that axis, the way model families
# settle into their own program-length habits.
PAD_RANGES: dict[str, tuple[int, int]] = {
    "balanced": (0, 14),
    "mover": (0, 2),
    "splitter": (0, 6),
    "bomber": (6, 30),
}

MOTIF_RATE = 0.8
REWORK_RATE = 0.25


class MockOperator(MutationOperator):
    """Pure function of (ctx, seed, bias): no I/O, bit-stable across runs."""

    def __init__(
        self,
        bias: OperatorBias | str = "balanced",
        core_size: int = DEFAULT_CORE_SIZE,
        max_warrior_length: int = DEFAULT_MAX_WARRIOR_LENGTH,
    ):
        self.bias = bias_profile(bias) if isinstance(bias, str) else bias
        self.core_size = core_size
        self.max_warrior_length = max_warrior_length

    @property
    def identity(self) -> str:
        return f"mock:{self.bias.name}"

    def generate(self, ctx: PromptContext, seed: int) -> Warrior:
        require_mode(ctx, MODE_NEW)
        rng = random.Random(seed)
        name = f"g{seed & 0xFFFFFFFF:08x}"
        motifs = MOTIFS.get(self.bias.name, ())
        if motifs and rng.random() < MOTIF_RATE:
            text = rng.choice(motifs)(rng)
            room = self.max_warrior_length - (text.count("\n") + 1)
            if room >= 0:
                text = self._pad(text, room, rng)
                return parse(text, name=name, core_size=self.core_size,
                             max_warrior_length=self.max_warrior_length,
                             origin=self.identity)
        return random_warrior(
            seed,
            self.bias,
            name=name,
            core_size=self.core_size,
            max_warrior_length=self.max_warrior_length,
            origin=self.identity,
        )

    def mutate(self, ctx: PromptContext, seed: int) -> Warrior:
        require_mode(ctx, MODE_MUTATE)
        assert ctx.parent is not None
        rng = random.Random(seed)
        motifs = MOTIFS.get(self.bias.name, ())
        if motifs and rng.random() < REWORK_RATE:
            return self._rework(ctx.parent, rng)
        child = ctx.parent
        for _ in range(rng.randint(1, 2)):
            child = random_perturb(
                child,
                rng.randrange(2**63),
                self.bias,
                core_size=self.core_size,
                max_warrior_length=self.max_warrior_length,
            )
        return child.with_origin(self.identity)

    def _pad(self, text: str, room: int, rng: random.Random) -> str:
        lo, hi = PAD_RANGES.get(self.bias.name, (0, 4))
        for _ in range(min(room, rng.randint(lo, hi))):
            text += "\nDAT #0, #0"
        return text

    def _rework(self, parent: Warrior, rng: random.Random) -> Warrior:
        """Rewrite the parent in this profile's own idiom: a fresh motif up
        front, profile-banded padding, and a fragment of the parent kept as
        payload behind it."""
        text = rng.choice(MOTIFS[self.bias.name])(rng)
        head_len = text.count("\n") + 1
        text = self._pad(text, self.max_warrior_length - head_len, rng)
        head = parse(text, name=f"m{rng.randrange(2**32):08x}",
                     core_size=self.core_size,
                     max_warrior_length=self.max_warrior_length,
                     origin=self.identity)
        keep = rng.randint(0, min(len(parent),
                                  self.max_warrior_length - len(head)))
        if not keep:
            return head
        tail = parent.instructions[len(parent) - keep:]
        return replace(head, instructions=head.instructions + tail)
