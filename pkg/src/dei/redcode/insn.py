"""Redcode instruction and warrior data model (ICWS-94 core set, no P-space)."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from enum import IntEnum


class Opcode(IntEnum):
    DAT = 0
    MOV = 1
    ADD = 2
    SUB = 3
    MUL = 4
    DIV = 5
    MOD = 6
    JMP = 7
    JMZ = 8
    JMN = 9
    DJN = 10
    SEQ = 11
    SNE = 12
    SLT = 13
    SPL = 14
    NOP = 15


class Modifier(IntEnum):
    A = 0
    B = 1
    AB = 2
    BA = 3
    F = 4
    X = 5
    I = 6


class Mode(IntEnum):
    IMMEDIATE = 0      # '#'
    DIRECT = 1         # '$'
    B_INDIRECT = 2     # '@'
    B_PREDEC = 3       # '<'
    B_POSTINC = 4      # '>'
    A_INDIRECT = 5     # '*'
    A_PREDEC = 6       # '{'
    A_POSTINC = 7      # '}'


MODE_SIGILS = {
    Mode.IMMEDIATE: "#",
    Mode.DIRECT: "$",
    Mode.B_INDIRECT: "@",
    Mode.B_PREDEC: "<",
    Mode.B_POSTINC: ">",
    Mode.A_INDIRECT: "*",
    Mode.A_PREDEC: "{",
    Mode.A_POSTINC: "}",
}

SIGIL_MODES = {v: k for k, v in MODE_SIGILS.items()}

DEFAULT_CORE_SIZE = 8000
DEFAULT_MAX_WARRIOR_LENGTH = 100


@dataclass(frozen=True)
class Instruction:
    """One core cell: opcode, modifier, and two moded fields.

    Field values are stored normalized into [0, core_size); the parser applies
    the reduction, so equality and hashing are well defined.
    """

    opcode: Opcode
    modifier: Modifier
    a_mode: Mode
    a_value: int
    b_mode: Mode
    b_value: int

    def text(self) -> str:
        return "%s.%s %s%d, %s%d" % (
            self.opcode.name,
            self.modifier.name,
            MODE_SIGILS[self.a_mode],
            self.a_value,
            MODE_SIGILS[self.b_mode],
            self.b_value,
        )


@dataclass(frozen=True)
class Warrior:
    """A named Redcode program: the genome evolved and battled everywhere else."""

    name: str
    instructions: tuple[Instruction, ...]
    start_offset: int = 0
    author: str | None = None
    origin: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.instructions, tuple):
            object.__setattr__(self, "instructions", tuple(self.instructions))
        if not self.instructions:
            raise ValueError("warrior must contain at least one instruction")
        if not 0 <= self.start_offset < len(self.instructions):
            raise ValueError(
                f"start offset {self.start_offset} outside program of length {len(self.instructions)}"
            )

    def __len__(self) -> int:
        return len(self.instructions)

    def content_hash(self) -> str:
        """Hash of the program content (code + start), independent of name/origin."""
        h = hashlib.blake2b(digest_size=16)
        h.update(str(self.start_offset).encode())
        for ins in self.instructions:
            h.update(
                b"%d,%d,%d,%d,%d,%d;"
                % (ins.opcode, ins.modifier, ins.a_mode, ins.a_value, ins.b_mode, ins.b_value)
            )
        return h.hexdigest()

    def with_origin(self, origin: str) -> "Warrior":
        return replace(self, origin=origin)


def normalize(value: int, core_size: int) -> int:
    return value % core_size
