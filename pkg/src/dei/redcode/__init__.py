"""Redcode warrior parsing, serialization, and biased perturbation."""

from .insn import (
    DEFAULT_CORE_SIZE,
    DEFAULT_MAX_WARRIOR_LENGTH,
    Instruction,
    Mode,
    Modifier,
    Opcode,
    Warrior,
)
from .parser import RedcodeSyntaxError, parse, parse_file, serialize
from .perturb import EDIT_KINDS, OperatorBias, random_perturb, random_warrior

__all__ = [
    "DEFAULT_CORE_SIZE",
    "DEFAULT_MAX_WARRIOR_LENGTH",
    "EDIT_KINDS",
    "Instruction",
    "Mode",
    "Modifier",
    "Opcode",
    "OperatorBias",
    "RedcodeSyntaxError",
    "Warrior",
    "parse",
    "parse_file",
    "random_perturb",
    "random_warrior",
    "serialize",
]
