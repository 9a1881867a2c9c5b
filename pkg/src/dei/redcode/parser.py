"""Redcode assembler front end: text -> Warrior and back.

Accepts the flat ICWS-94 core syntax: optional label, opcode with optional
modifier, one or two operands with addressing-mode sigils, `;` comments, and
the ORG / END directives. Labels resolve to offsets relative to the using
instruction. Macro features (EQU, FOR, ...) are deliberately rejected.
"""

from __future__ import annotations

import os
import re

from .insn import (
    DEFAULT_CORE_SIZE,
    DEFAULT_MAX_WARRIOR_LENGTH,
    SIGIL_MODES,
    Instruction,
    Mode,
    Modifier,
    Opcode,
    Warrior,
)

OPCODE_NAMES = {op.name for op in Opcode} | {"CMP"}  # CMP is the ICWS-88 alias of SEQ
MODIFIER_NAMES = {m.name for m in Modifier}
REJECTED_DIRECTIVES = {"EQU", "FOR", "ROF", "PIN", "LDP", "STP"}

_LABEL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|[#$@<>*{}+\-,.]|\S")


class RedcodeSyntaxError(ValueError):
    """Parse failure with source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, col {column}: {message}" if line else message)


def _default_modifier(opcode: Opcode, a_mode: Mode, b_mode: Mode) -> Modifier:
    # ICWS-94 assembler defaults, as implemented by pMARS.
    if opcode == Opcode.DAT:
        return Modifier.F
    if opcode in (Opcode.MOV, Opcode.SEQ, Opcode.SNE):
        if a_mode == Mode.IMMEDIATE:
            return Modifier.AB
        if b_mode == Mode.IMMEDIATE:
            return Modifier.B
        return Modifier.I
    if opcode in (Opcode.ADD, Opcode.SUB, Opcode.MUL, Opcode.DIV, Opcode.MOD):
        if a_mode == Mode.IMMEDIATE:
            return Modifier.AB
        if b_mode == Mode.IMMEDIATE:
            return Modifier.B
        return Modifier.F
    if opcode == Opcode.SLT:
        return Modifier.AB if a_mode == Mode.IMMEDIATE else Modifier.B
    # JMP, JMZ, JMN, DJN, SPL, NOP
    return Modifier.B


class _Line:
    __slots__ = ("number", "label", "opcode", "modifier", "operands")

    def __init__(self, number: int):
        self.number = number
        self.label: str | None = None
        self.opcode: str | None = None
        self.modifier: str | None = None
        # each operand: (mode sigil or None, [(sign, term)...]) where term is int or label
        self.operands: list[tuple[str | None, list[tuple[int, object]]]] = []


def _tokenize(text: str, lineno: int) -> list[tuple[str, int]]:
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        tokens.append((m.group(0), m.start() + 1))
    return tokens


def _parse_expr(tokens: list[tuple[str, int]], pos: int, lineno: int):
    """Parse  [+|-] term ( (+|-) term )*  where term = integer | label."""
    terms: list[tuple[int, object]] = []
    sign = 1
    expect_term = True
    while pos < len(tokens):
        tok, col = tokens[pos]
        if expect_term:
            if tok == "-":
                sign = -sign
                pos += 1
                continue
            if tok == "+":
                pos += 1
                continue
            if tok.isdigit():
                terms.append((sign, int(tok)))
            elif _LABEL_RE.match(tok):
                terms.append((sign, tok))
            else:
                raise RedcodeSyntaxError(f"expected a number or label, got {tok!r}", lineno, col)
            sign = 1
            expect_term = False
            pos += 1
        else:
            if tok in "+-":
                sign = 1 if tok == "+" else -1
                pos += 1
                expect_term = True
            else:
                break
    if expect_term or not terms:
        col = tokens[pos - 1][1] if tokens else 1
        raise RedcodeSyntaxError("incomplete expression", lineno, col)
    return terms, pos


def _scan_line(raw: str, lineno: int) -> _Line | None:
    text = raw.split(";", 1)[0].rstrip()
    if not text.strip():
        return None
    tokens = _tokenize(text, lineno)
    line = _Line(lineno)
    pos = 0

    tok, col = tokens[pos]
    upper = tok.upper()
    if _LABEL_RE.match(tok) and upper not in OPCODE_NAMES and upper not in ("ORG", "END"):
        if upper in REJECTED_DIRECTIVES:
            raise RedcodeSyntaxError(f"directive {upper} is not supported", lineno, col)
        line.label = tok
        pos += 1
        if pos == len(tokens):
            return line
        # a stray ':' after a label is tolerated
        if tokens[pos][0] == ":":
            pos += 1
            if pos == len(tokens):
                return line
        tok, col = tokens[pos]
        upper = tok.upper()

    if not _LABEL_RE.match(tok):
        raise RedcodeSyntaxError(f"expected an opcode, got {tok!r}", lineno, col)
    if upper in REJECTED_DIRECTIVES:
        raise RedcodeSyntaxError(f"directive {upper} is not supported", lineno, col)
    if upper not in OPCODE_NAMES and upper not in ("ORG", "END"):
        raise RedcodeSyntaxError(f"unknown opcode {tok!r}", lineno, col)
    line.opcode = upper
    pos += 1

    if pos < len(tokens) and tokens[pos][0] == ".":
        pos += 1
        if pos == len(tokens):
            raise RedcodeSyntaxError("missing modifier after '.'", lineno, col)
        mod_tok, mod_col = tokens[pos]
        if mod_tok.upper() not in MODIFIER_NAMES:
            raise RedcodeSyntaxError(f"unknown modifier {mod_tok!r}", lineno, mod_col)
        line.modifier = mod_tok.upper()
        pos += 1

    while pos < len(tokens):
        tok, col = tokens[pos]
        mode = None
        if tok in SIGIL_MODES:
            mode = tok
            pos += 1
            if pos == len(tokens):
                raise RedcodeSyntaxError("missing operand after addressing mode", lineno, col)
        terms, pos = _parse_expr(tokens, pos, lineno)
        line.operands.append((mode, terms))
        if pos < len(tokens):
            tok, col = tokens[pos]
            if tok != ",":
                raise RedcodeSyntaxError(f"expected ',' between operands, got {tok!r}", lineno, col)
            pos += 1
            if pos == len(tokens):
                raise RedcodeSyntaxError("missing operand after ','", lineno, col)
    if len(line.operands) > 2:
        raise RedcodeSyntaxError("more than two operands", lineno, 1)
    return line


def parse(
    source: str,
    name: str = "unnamed",
    core_size: int = DEFAULT_CORE_SIZE,
    max_warrior_length: int = DEFAULT_MAX_WARRIOR_LENGTH,
    origin: str | None = None,
) -> Warrior:
    """Assemble Redcode text into a Warrior.

    Field values are normalized into [0, core_size). `;name` / `;author`
    comment directives populate warrior metadata; ORG (or `END label`) sets
    the start offset.
    """
    meta_name = None
    meta_author = None
    lines: list[_Line] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith(";"):
            body = stripped[1:].strip()
            lowered = body.lower()
            if lowered.startswith("name "):
                meta_name = body[5:].strip()
            elif lowered.startswith("author "):
                meta_author = body[7:].strip()
            continue
        parsed = _scan_line(raw, lineno)
        if parsed is not None:
            lines.append(parsed)

    labels: dict[str, int] = {}
    program: list[_Line] = []
    org_expr = None
    org_line = 0
    end_expr = None
    end_line = 0
    ended = False
    for line in lines:
        if ended:
            raise RedcodeSyntaxError("instructions after END", line.number, 1)
        if line.opcode == "ORG":
            if len(line.operands) != 1:
                raise RedcodeSyntaxError("ORG takes exactly one operand", line.number, 1)
            if line.operands[0][0] is not None:
                raise RedcodeSyntaxError("ORG operand takes no addressing mode", line.number, 1)
            org_expr, org_line = line.operands[0][1], line.number
            continue
        if line.opcode == "END":
            if line.operands:
                if len(line.operands) != 1 or line.operands[0][0] is not None:
                    raise RedcodeSyntaxError("END takes at most one plain operand", line.number, 1)
                end_expr, end_line = line.operands[0][1], line.number
            ended = True
            continue
        if line.label is not None:
            if line.label in labels:
                raise RedcodeSyntaxError(f"duplicate label {line.label!r}", line.number, 1)
            labels[line.label] = len(program)  # binds to the next emitted instruction
        if line.opcode is None:
            continue  # label-only line
        program.append(line)

    if not program:
        raise RedcodeSyntaxError("empty program", len(source.splitlines()) or 1, 1)
    if len(program) > max_warrior_length:
        raise RedcodeSyntaxError(
            f"program has {len(program)} instructions, limit is {max_warrior_length}",
            program[max_warrior_length].number,
            1,
        )

    def resolve(terms, at_index: int, lineno: int, relative: bool) -> int:
        total = 0
        for sign, term in terms:
            if isinstance(term, int):
                total += sign * term
            else:
                if term not in labels:
                    raise RedcodeSyntaxError(f"undefined label {term!r}", lineno, 1)
                total += sign * (labels[term] - (at_index if relative else 0))
        return total

    instructions: list[Instruction] = []
    for index, line in enumerate(program):
        opcode = Opcode.SEQ if line.opcode == "CMP" else Opcode[line.opcode]
        operands = list(line.operands)
        if not operands:
            operands = [(None, [(1, 0)]), (None, [(1, 0)])]
        elif len(operands) == 1:
            operands.append((None, [(1, 0)]))
        (a_sigil, a_terms), (b_sigil, b_terms) = operands
        a_mode = SIGIL_MODES[a_sigil] if a_sigil else Mode.DIRECT
        b_mode = SIGIL_MODES[b_sigil] if b_sigil else Mode.DIRECT
        a_value = resolve(a_terms, index, line.number, relative=True) % core_size
        b_value = resolve(b_terms, index, line.number, relative=True) % core_size
        modifier = (
            Modifier[line.modifier]
            if line.modifier
            else _default_modifier(opcode, a_mode, b_mode)
        )
        instructions.append(Instruction(opcode, modifier, a_mode, a_value, b_mode, b_value))

    start = 0
    if end_expr is not None:
        start = resolve(end_expr, 0, end_line, relative=False)
    if org_expr is not None:
        start = resolve(org_expr, 0, org_line, relative=False)
    if not 0 <= start < len(instructions):
        raise RedcodeSyntaxError(
            f"start offset {start} outside program of length {len(instructions)}",
            org_line or end_line or 1,
            1,
        )

    return Warrior(
        name=meta_name or name,
        instructions=tuple(instructions),
        start_offset=start,
        author=meta_author,
        origin=origin,
    )


def serialize(warrior: Warrior) -> str:
    """Canonical text form; parse(serialize(w)) is structurally equal to w."""
    out = []
    out.append(f";name {warrior.name}")
    if warrior.author:
        out.append(f";author {warrior.author}")
    if warrior.start_offset:
        out.append(f"ORG {warrior.start_offset}")
    for ins in warrior.instructions:
        out.append(ins.text())
    return "\n".join(out) + "\n"


def parse_file(
    path: str,
    core_size: int = DEFAULT_CORE_SIZE,
    max_warrior_length: int = DEFAULT_MAX_WARRIOR_LENGTH,
    origin: str | None = None,
) -> Warrior:
    with open(path, "r", encoding="utf-8") as fh:
        source = fh.read()
    default_name = os.path.splitext(os.path.basename(path))[0]
    return parse(
        source,
        name=default_name,
        core_size=core_size,
        max_warrior_length=max_warrior_length,
        origin=origin,
    )
