"""Core battle virtual machine.

The execution kernel is JIT-compiled with numba; the first battle in a fresh
process pays a one-time compilation cost (cached on disk afterwards).  The
core is a single (core_size, 6) int32 array, one row per cell, so each cell
occupies one cache line.  Corner cases of the instruction semantics are
documented in SEMANTICS.md at the repository root.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..redcode.insn import Instruction, Mode, Modifier, Opcode, Warrior
from .config import ConfigError, MarsConfig


class PlacementError(RuntimeError):
    """Raised when warriors cannot be placed with the required separation."""


# Plain int mirrors of the enums: numba folds module-level ints into the
# compiled kernel as constants.
OP_DAT = int(Opcode.DAT)
OP_MOV = int(Opcode.MOV)
OP_ADD = int(Opcode.ADD)
OP_MOD = int(Opcode.MOD)
OP_JMP = int(Opcode.JMP)
OP_JMZ = int(Opcode.JMZ)
OP_JMN = int(Opcode.JMN)
OP_DJN = int(Opcode.DJN)
OP_SEQ = int(Opcode.SEQ)
OP_SNE = int(Opcode.SNE)
OP_SLT = int(Opcode.SLT)
OP_SPL = int(Opcode.SPL)
OP_NOP = int(Opcode.NOP)

MD_A = int(Modifier.A)
MD_B = int(Modifier.B)
MD_AB = int(Modifier.AB)
MD_BA = int(Modifier.BA)
MD_F = int(Modifier.F)
MD_X = int(Modifier.X)
MD_I = int(Modifier.I)

AM_IMMEDIATE = int(Mode.IMMEDIATE)
AM_DIRECT = int(Mode.DIRECT)
AM_B_INDIRECT = int(Mode.B_INDIRECT)
AM_B_PREDEC = int(Mode.B_PREDEC)
AM_B_POSTINC = int(Mode.B_POSTINC)
AM_A_INDIRECT = int(Mode.A_INDIRECT)
AM_A_PREDEC = int(Mode.A_PREDEC)
AM_A_POSTINC = int(Mode.A_POSTINC)

# column layout of a core row
F_OP, F_MO, F_AM, F_AV, F_BM, F_BV = 0, 1, 2, 3, 4, 5

TRACE_FIELDS = 10


# Core addresses and field values are invariants of the kernel: always in
# [0, core_size).  Sums of two of them sit in [0, 2*core_size), so a single
# conditional subtraction replaces the much slower integer modulo.
@njit(cache=True, nogil=True, inline="always")
def _wrap(x, core_size):
    return x - core_size if x >= core_size else x


@njit(cache=True, nogil=True, inline="always")
def _wrap_dec(x, core_size):
    return x - 1 if x > 0 else core_size - 1


@njit(cache=True, nogil=True, inline="always")
def _wrap_inc(x, core_size):
    nxt = x + 1
    return nxt if nxt < core_size else 0


@njit(cache=True, nogil=True, inline="always")
def _eval_operand(mode, value, pc, core, core_size, touched, w):
    """Resolve one operand: apply pre/post side effects, snapshot the target.

    Returns the relative pointer plus the six fields of the instruction the
    pointer designates, captured after pre-decrement but before
    post-increment.
    """
    if mode == AM_IMMEDIATE:
        ptr = 0
    elif mode == AM_DIRECT:
        ptr = value
    else:
        inter = _wrap(pc + value, core_size)
        touched[w, inter] = 1
        if mode == AM_B_PREDEC:
            core[inter, F_BV] = _wrap_dec(core[inter, F_BV], core_size)
        elif mode == AM_A_PREDEC:
            core[inter, F_AV] = _wrap_dec(core[inter, F_AV], core_size)
        if mode == AM_B_INDIRECT or mode == AM_B_PREDEC or mode == AM_B_POSTINC:
            ptr = _wrap(value + core[inter, F_BV], core_size)
        else:
            ptr = _wrap(value + core[inter, F_AV], core_size)
    addr = _wrap(pc + ptr, core_size)
    touched[w, addr] = 1
    s_op = core[addr, F_OP]
    s_mo = core[addr, F_MO]
    s_am = core[addr, F_AM]
    s_av = core[addr, F_AV]
    s_bm = core[addr, F_BM]
    s_bv = core[addr, F_BV]
    if mode == AM_B_POSTINC:
        inter = _wrap(pc + value, core_size)
        core[inter, F_BV] = _wrap_inc(core[inter, F_BV], core_size)
    elif mode == AM_A_POSTINC:
        inter = _wrap(pc + value, core_size)
        core[inter, F_AV] = _wrap_inc(core[inter, F_AV], core_size)
    return ptr, s_op, s_mo, s_am, s_av, s_bm, s_bv


@njit(cache=True, nogil=True, inline="always")
def _arith(kind, lhs, rhs, core_size):
    # lhs comes from the B-target snapshot, rhs from the A-operand snapshot
    if kind == 0:
        return _wrap(lhs + rhs, core_size)
    if kind == 1:
        return _wrap(lhs - rhs + core_size, core_size)
    return np.int32((np.int64(lhs) * np.int64(rhs)) % core_size)


@njit(cache=True, nogil=True)
def _run(core, queue, qhead, qlen, core_size, cap, max_cycles, halt_threshold,
         touched, trace, trace_cap):
    n = queue.shape[0]
    lifespan = np.full(n, -1, np.int64)
    alive = 0
    for w in range(n):
        if qlen[w] > 0:
            alive += 1
    trace_len = 0
    for cycle in range(max_cycles):
        for w in range(n):
            if qlen[w] == 0:
                continue
            pc = queue[w, qhead[w]]
            qhead[w] = _wrap_inc(qhead[w], cap)
            qlen[w] -= 1

            iop = core[pc, F_OP]
            imod = core[pc, F_MO]
            iam = core[pc, F_AM]
            iav = core[pc, F_AV]
            ibm = core[pc, F_BM]
            ibv = core[pc, F_BV]
            touched[w, pc] = 1

            rpa, a_op, a_mo, a_am, a_av, a_bm, a_bv = _eval_operand(
                iam, iav, pc, core, core_size, touched, w)
            rpb, b_op, b_mo, b_am, b_av, b_bm, b_bv = _eval_operand(
                ibm, ibv, pc, core, core_size, touched, w)

            aaddr = _wrap(pc + rpa, core_size)
            baddr = _wrap(pc + rpb, core_size)
            pc1 = _wrap_inc(pc, core_size)
            pc2 = _wrap(pc + 2, core_size)

            if iop == OP_DAT:
                pass
            elif iop == OP_MOV:
                if imod == MD_A:
                    core[baddr, F_AV] = a_av
                elif imod == MD_B:
                    core[baddr, F_BV] = a_bv
                elif imod == MD_AB:
                    core[baddr, F_BV] = a_av
                elif imod == MD_BA:
                    core[baddr, F_AV] = a_bv
                elif imod == MD_F:
                    core[baddr, F_AV] = a_av
                    core[baddr, F_BV] = a_bv
                elif imod == MD_X:
                    core[baddr, F_AV] = a_bv
                    core[baddr, F_BV] = a_av
                else:
                    core[baddr, F_OP] = a_op
                    core[baddr, F_MO] = a_mo
                    core[baddr, F_AM] = a_am
                    core[baddr, F_AV] = a_av
                    core[baddr, F_BM] = a_bm
                    core[baddr, F_BV] = a_bv
                touched[w, baddr] = 1
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = pc1
                qlen[w] += 1
            elif OP_ADD <= iop <= OP_MOD:
                kind = iop - OP_ADD
                died = False
                if kind <= 2:
                    if imod == MD_A:
                        core[baddr, F_AV] = _arith(kind, b_av, a_av, core_size)
                    elif imod == MD_B:
                        core[baddr, F_BV] = _arith(kind, b_bv, a_bv, core_size)
                    elif imod == MD_AB:
                        core[baddr, F_BV] = _arith(kind, b_bv, a_av, core_size)
                    elif imod == MD_BA:
                        core[baddr, F_AV] = _arith(kind, b_av, a_bv, core_size)
                    elif imod == MD_X:
                        core[baddr, F_AV] = _arith(kind, b_av, a_bv, core_size)
                        core[baddr, F_BV] = _arith(kind, b_bv, a_av, core_size)
                    else:
                        core[baddr, F_AV] = _arith(kind, b_av, a_av, core_size)
                        core[baddr, F_BV] = _arith(kind, b_bv, a_bv, core_size)
                else:
                    # DIV and MOD kill the process on any zero divisor, after
                    # completing whatever field divisions have nonzero divisors
                    is_mod = kind == 4
                    if imod == MD_A:
                        if a_av == 0:
                            died = True
                        else:
                            core[baddr, F_AV] = b_av % a_av if is_mod else b_av // a_av
                    elif imod == MD_B:
                        if a_bv == 0:
                            died = True
                        else:
                            core[baddr, F_BV] = b_bv % a_bv if is_mod else b_bv // a_bv
                    elif imod == MD_AB:
                        if a_av == 0:
                            died = True
                        else:
                            core[baddr, F_BV] = b_bv % a_av if is_mod else b_bv // a_av
                    elif imod == MD_BA:
                        if a_bv == 0:
                            died = True
                        else:
                            core[baddr, F_AV] = b_av % a_bv if is_mod else b_av // a_bv
                    elif imod == MD_X:
                        if a_bv == 0:
                            died = True
                        else:
                            core[baddr, F_AV] = b_av % a_bv if is_mod else b_av // a_bv
                        if a_av == 0:
                            died = True
                        else:
                            core[baddr, F_BV] = b_bv % a_av if is_mod else b_bv // a_av
                    else:
                        if a_av == 0:
                            died = True
                        else:
                            core[baddr, F_AV] = b_av % a_av if is_mod else b_av // a_av
                        if a_bv == 0:
                            died = True
                        else:
                            core[baddr, F_BV] = b_bv % a_bv if is_mod else b_bv // a_bv
                touched[w, baddr] = 1
                if not died:
                    queue[w, _wrap(qhead[w] + qlen[w], cap)] = pc1
                    qlen[w] += 1
            elif iop == OP_JMP:
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = aaddr
                qlen[w] += 1
            elif iop == OP_JMZ:
                if imod == MD_A or imod == MD_BA:
                    cond = b_av == 0
                elif imod == MD_B or imod == MD_AB:
                    cond = b_bv == 0
                else:
                    cond = b_av == 0 and b_bv == 0
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = aaddr if cond else pc1
                qlen[w] += 1
            elif iop == OP_JMN:
                if imod == MD_A or imod == MD_BA:
                    cond = b_av != 0
                elif imod == MD_B or imod == MD_AB:
                    cond = b_bv != 0
                else:
                    cond = b_av != 0 or b_bv != 0
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = aaddr if cond else pc1
                qlen[w] += 1
            elif iop == OP_DJN:
                if imod == MD_A or imod == MD_BA:
                    core[baddr, F_AV] = _wrap_dec(core[baddr, F_AV], core_size)
                    cond = _wrap_dec(b_av, core_size) != 0
                elif imod == MD_B or imod == MD_AB:
                    core[baddr, F_BV] = _wrap_dec(core[baddr, F_BV], core_size)
                    cond = _wrap_dec(b_bv, core_size) != 0
                else:
                    core[baddr, F_AV] = _wrap_dec(core[baddr, F_AV], core_size)
                    core[baddr, F_BV] = _wrap_dec(core[baddr, F_BV], core_size)
                    cond = (_wrap_dec(b_av, core_size) != 0
                            or _wrap_dec(b_bv, core_size) != 0)
                touched[w, baddr] = 1
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = aaddr if cond else pc1
                qlen[w] += 1
            elif iop == OP_SEQ or iop == OP_SNE:
                if imod == MD_A:
                    eq = a_av == b_av
                elif imod == MD_B:
                    eq = a_bv == b_bv
                elif imod == MD_AB:
                    eq = a_av == b_bv
                elif imod == MD_BA:
                    eq = a_bv == b_av
                elif imod == MD_F:
                    eq = a_av == b_av and a_bv == b_bv
                elif imod == MD_X:
                    eq = a_av == b_bv and a_bv == b_av
                else:
                    eq = (a_op == b_op and a_mo == b_mo and a_am == b_am
                          and a_av == b_av and a_bm == b_bm and a_bv == b_bv)
                skip = eq if iop == OP_SEQ else not eq
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = pc2 if skip else pc1
                qlen[w] += 1
            elif iop == OP_SLT:
                if imod == MD_A:
                    cond = a_av < b_av
                elif imod == MD_B:
                    cond = a_bv < b_bv
                elif imod == MD_AB:
                    cond = a_av < b_bv
                elif imod == MD_BA:
                    cond = a_bv < b_av
                elif imod == MD_X:
                    cond = a_av < b_bv and a_bv < b_av
                else:
                    cond = a_av < b_av and a_bv < b_bv
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = pc2 if cond else pc1
                qlen[w] += 1
            elif iop == OP_SPL:
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = pc1
                qlen[w] += 1
                if qlen[w] < cap:
                    queue[w, _wrap(qhead[w] + qlen[w], cap)] = aaddr
                    qlen[w] += 1
            else:
                queue[w, _wrap(qhead[w] + qlen[w], cap)] = pc1
                qlen[w] += 1

            if trace_len < trace_cap:
                trace[trace_len, 0] = cycle
                trace[trace_len, 1] = w
                trace[trace_len, 2] = pc
                trace[trace_len, 3] = iop
                trace[trace_len, 4] = imod
                trace[trace_len, 5] = iam
                trace[trace_len, 6] = iav
                trace[trace_len, 7] = ibm
                trace[trace_len, 8] = ibv
                trace[trace_len, 9] = qlen[w]
                trace_len += 1

            if qlen[w] == 0:
                lifespan[w] = cycle
                alive -= 1
                if alive <= halt_threshold:
                    return lifespan, cycle + 1, trace_len
    return lifespan, max_cycles, trace_len


@dataclass(frozen=True)
class TraceStep:
    """One executed instruction, captured at execution time."""

    cycle: int
    warrior: int
    pc: int
    instruction: Instruction
    processes: int

    @property
    def died(self) -> bool:
        """True when this step left its warrior without live processes."""
        return self.processes == 0

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "warrior": self.warrior,
            "pc": self.pc,
            "instruction": self.instruction.text(),
            "processes": self.processes,
            "died": self.died,
        }


@dataclass
class BattleOutcome:
    """Result of one battle.

    ``lifespans[i]`` counts the cycles warrior ``i`` finished with at least
    one live process; a warrior alive at the halt is credited with the full
    ``max_cycles`` regardless of when the battle actually stopped.
    """

    warriors: tuple[Warrior, ...]
    positions: tuple[int, ...]
    lifespans: np.ndarray
    survived: np.ndarray
    cycles: int
    max_cycles: int
    core_size: int
    touched: np.ndarray
    core: np.ndarray
    trace: list[TraceStep] | None = None
    trace_truncated: bool = False

    @property
    def winner(self) -> int | None:
        """Index of the sole survivor, or None on a tie / mutual death."""
        alive = np.flatnonzero(self.survived)
        if len(alive) == 1:
            return int(alive[0])
        return None

    def touched_fraction(self) -> np.ndarray:
        return self.touched.sum(axis=1) / self.core_size


def _circular_distance(a: int, b: int, core_size: int) -> int:
    d = abs(a - b) % core_size
    return min(d, core_size - d)


def place_warriors(lengths: list[int], config: MarsConfig,
                   rng: random.Random) -> list[int]:
    """Pick start positions: first warrior at 0, the rest uniformly at random
    with circular start-to-start separation of at least ``min_separation``."""
    n = len(lengths)
    if n * config.min_separation > config.core_size and n > 1:
        raise PlacementError(
            f"cannot separate {n} warriors by {config.min_separation} "
            f"in a core of {config.core_size}")
    positions = [0]
    for _ in range(1, n):
        for _attempt in range(1000):
            candidate = rng.randrange(config.core_size)
            if all(_circular_distance(candidate, p, config.core_size)
                   >= config.min_separation for p in positions):
                positions.append(candidate)
                break
        else:
            raise PlacementError("placement rejection sampling exhausted")
    return positions


def run_battle(warriors: list[Warrior] | tuple[Warrior, ...],
               config: MarsConfig | None = None,
               seed: int = 0,
               trace: bool = False,
               trace_limit: int = 200_000) -> BattleOutcome:
    """Run one battle to completion.

    Warriors execute one instruction per cycle in list order.  The battle
    halts when at most one warrior is alive (for multi-warrior battles), when
    a lone warrior dies, or after ``max_cycles`` cycles.
    """
    config = config or MarsConfig()
    warriors = tuple(warriors)
    if not warriors:
        raise ConfigError("at least one warrior is required")
    for w in warriors:
        if len(w) > config.max_warrior_length:
            raise ConfigError(
                f"warrior {w.name!r} has {len(w)} instructions; "
                f"limit is {config.max_warrior_length}")

    n = len(warriors)
    m = config.core_size
    rng = random.Random(seed)
    positions = place_warriors([len(w) for w in warriors], config, rng)

    # empty core cells hold DAT.F $0, $0
    core = np.zeros((m, 6), np.int32)
    core[:, F_MO] = MD_F
    core[:, F_AM] = AM_DIRECT
    core[:, F_BM] = AM_DIRECT
    for w, pos in zip(warriors, positions):
        for offset, ins in enumerate(w.instructions):
            addr = (pos + offset) % m
            core[addr, F_OP] = ins.opcode
            core[addr, F_MO] = ins.modifier
            core[addr, F_AM] = ins.a_mode
            # field values are reduced modulo the core size at load time, so a
            # warrior written for a larger core stays within kernel bounds
            core[addr, F_AV] = ins.a_value % m
            core[addr, F_BM] = ins.b_mode
            core[addr, F_BV] = ins.b_value % m

    cap = config.max_processes
    queue = np.zeros((n, cap), np.int32)
    qhead = np.zeros(n, np.int32)
    qlen = np.ones(n, np.int32)
    for i, (w, pos) in enumerate(zip(warriors, positions)):
        queue[i, 0] = (pos + w.start_offset) % m

    touched = np.zeros((n, m), np.uint8)
    trace_cap = min(config.max_cycles * n, trace_limit) if trace else 0
    trace_buf = np.zeros((trace_cap, TRACE_FIELDS), np.int64)
    halt_threshold = 1 if n >= 2 else 0

    raw_lifespans, cycles, trace_len = _run(
        core, queue, qhead, qlen, m, cap, config.max_cycles, halt_threshold,
        touched, trace_buf, trace_cap)

    survived = raw_lifespans < 0
    lifespans = np.where(survived, config.max_cycles, raw_lifespans)

    steps = None
    truncated = False
    if trace:
        steps = []
        for row in trace_buf[:trace_len]:
            ins = Instruction(
                Opcode(int(row[3])), Modifier(int(row[4])),
                Mode(int(row[5])), int(row[6]), Mode(int(row[7])), int(row[8]))
            steps.append(TraceStep(
                cycle=int(row[0]), warrior=int(row[1]), pc=int(row[2]),
                instruction=ins, processes=int(row[9])))
        truncated = trace_len >= trace_cap and cycles * n > trace_cap

    return BattleOutcome(
        warriors=warriors,
        positions=tuple(positions),
        lifespans=lifespans,
        survived=survived,
        cycles=cycles,
        max_cycles=config.max_cycles,
        core_size=m,
        touched=touched,
        core=core,
        trace=steps,
        trace_truncated=truncated,
    )
