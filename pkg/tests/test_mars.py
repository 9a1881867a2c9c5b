import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dei.mars import (
    F_AV,
    F_BV,
    F_OP,
    ConfigError,
    MarsConfig,
    PlacementError,
    battle_seed,
    evaluate,
    fitness_from_lifespans,
    fitness_from_masks,
    masks_from_lifespans,
    place_warriors,
    run_battle,
)
from dei.redcode import Opcode, parse

SMALL = 64


def small_config(max_cycles, **kwargs):
    defaults = dict(core_size=SMALL, max_cycles=max_cycles,
                    max_warrior_length=16, min_separation=16,
                    rounds_per_pair=1)
    defaults.update(kwargs)
    return MarsConfig(**defaults)


def run_small(source, max_cycles, **kwargs):
    w = parse(source, core_size=SMALL)
    return run_battle([w], small_config(max_cycles, **kwargs), seed=0)


class TestConfig:
    def test_defaults(self):
        cfg = MarsConfig()
        assert cfg.core_size == 8000
        assert cfg.max_cycles == 80000
        assert cfg.max_processes == 8000
        assert cfg.rounds_per_pair == 20

    @pytest.mark.parametrize("kwargs", [
        dict(core_size=1),
        dict(core_size=2**25),
        dict(max_cycles=0),
        dict(max_processes=0),
        dict(max_warrior_length=0),
        dict(max_warrior_length=9000),
        dict(min_separation=50),
        dict(min_separation=9000),
        dict(rounds_per_pair=0),
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigError):
            MarsConfig(**kwargs)

    def test_dict_round_trip(self):
        cfg = MarsConfig(core_size=4000, max_cycles=1000,
                         max_warrior_length=50, min_separation=50)
        assert MarsConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ConfigError):
            MarsConfig.from_dict({"core_sized": 1})


class TestOpcodes:
    """Hand-computed single-step outcomes; positions start at 0 so relative
    and absolute addresses coincide."""

    def test_mov_i_imp_march(self):
        out = run_small("MOV.I $0, $1", 10)
        assert bool(out.survived[0])
        for addr in range(11):
            assert out.core[addr, F_OP] == Opcode.MOV

    def test_mov_ab_immediate(self):
        out = run_small("MOV.AB #7, $2\nDAT #1, #1\nDAT #3, #3", 1)
        assert out.core[2, F_AV] == 3
        assert out.core[2, F_BV] == 7

    def test_add_f(self):
        out = run_small("ADD.F $1, $2\nDAT #5, #10\nDAT #20, #30", 1)
        assert out.core[2, F_AV] == 25
        assert out.core[2, F_BV] == 40

    def test_sub_wraps(self):
        out = run_small("SUB.AB #5, $1\nDAT #0, #3", 1)
        assert out.core[1, F_BV] == (3 - 5) % SMALL

    def test_mul_x_crossed(self):
        out = run_small("MUL.X $1, $2\nDAT #3, #5\nDAT #7, #11", 1)
        assert out.core[2, F_AV] == (7 * 5) % SMALL
        assert out.core[2, F_BV] == (11 * 3) % SMALL

    def test_div_zero_kills_after_partial_write(self):
        out = run_small("DIV.F $1, $2\nDAT #0, #2\nDAT #8, #9", 5)
        assert not out.survived[0]
        assert out.lifespans[0] == 0
        assert out.cycles == 1
        assert out.core[2, F_AV] == 8   # zero divisor: field untouched
        assert out.core[2, F_BV] == 4   # 9 // 2 still written

    def test_mod(self):
        out = run_small("MOD.AB #5, $1\nDAT #0, #13", 1)
        assert out.core[1, F_BV] == 13 % 5

    def test_jmp_target(self):
        out = run_small("JMP $3, $0\nDAT #0, #0\nDAT #0, #0\nNOP $0", 10)
        w = parse("JMP $3, $0\nDAT #0, #0\nDAT #0, #0\nNOP $0", core_size=SMALL)
        traced = run_battle([w], small_config(10), seed=0, trace=True)
        pcs = [s.pc for s in traced.trace]
        assert pcs[:2] == [0, 3]
        assert out.lifespans[0] == 2  # JMP, NOP, then background DAT

    def test_jmz_taken_and_not(self):
        taken = parse("JMZ.B $2, $1\nDAT #0, #0\nNOP $0", core_size=SMALL)
        out = run_battle([taken], small_config(3), seed=0, trace=True)
        assert [s.pc for s in out.trace][:2] == [0, 2]
        skipped = parse("JMZ.B $2, $1\nDAT #0, #5\nNOP $0", core_size=SMALL)
        out = run_battle([skipped], small_config(3), seed=0)
        assert out.lifespans[0] == 1  # falls into the DAT at 1

    def test_jmn_f_any_nonzero(self):
        jumps = parse("JMN.F $2, $1\nDAT #0, #5\nNOP $0", core_size=SMALL)
        out = run_battle([jumps], small_config(3), seed=0, trace=True)
        assert [s.pc for s in out.trace][:2] == [0, 2]
        falls = parse("JMN.F $2, $1\nDAT #0, #0\nNOP $0", core_size=SMALL)
        out = run_battle([falls], small_config(3), seed=0)
        assert out.lifespans[0] == 1

    def test_djn_wraps_zero_and_jumps(self):
        w = parse("DJN.B $2, $1\nDAT #9, #0\nNOP $0", core_size=SMALL)
        out = run_battle([w], small_config(3), seed=0, trace=True)
        assert out.core[1, F_BV] == SMALL - 1
        assert [s.pc for s in out.trace][:2] == [0, 2]

    def test_djn_reaching_zero_falls_through(self):
        w = parse("DJN.B $2, $1\nDAT #9, #1\nNOP $0", core_size=SMALL)
        out = run_battle([w], small_config(3), seed=0)
        assert out.core[1, F_BV] == 0
        assert out.lifespans[0] == 1  # falls into cell 1, which is a DAT

    def test_seq_i_and_sne(self):
        same = "SEQ.I $1, $2\nMOV.I $0, $1\nMOV.I $0, $1"
        out = run_battle([parse(same, core_size=SMALL)],
                         small_config(2), seed=0, trace=True)
        assert [s.pc for s in out.trace][:2] == [0, 2]
        diff = "SEQ.I $1, $2\nMOV.I $0, $1\nMOV.I $0, $2"
        out = run_battle([parse(diff, core_size=SMALL)],
                         small_config(2), seed=0, trace=True)
        assert [s.pc for s in out.trace][:2] == [0, 1]
        sne = "SNE.I $1, $2\nMOV.I $0, $1\nMOV.I $0, $2"
        out = run_battle([parse(sne, core_size=SMALL)],
                         small_config(2), seed=0, trace=True)
        assert [s.pc for s in out.trace][:2] == [0, 2]

    def test_slt(self):
        lt = parse("SLT.AB #3, $1\nDAT #0, #5\nNOP $0", core_size=SMALL)
        out = run_battle([lt], small_config(2), seed=0, trace=True)
        assert [s.pc for s in out.trace][:2] == [0, 2]
        ge = parse("SLT.AB #7, $1\nDAT #0, #5\nNOP $0", core_size=SMALL)
        out = run_battle([ge], small_config(2), seed=0, trace=True)
        assert [s.pc for s in out.trace][:2] == [0, 1]

    def test_spl_continuation_runs_before_split(self):
        w = parse("SPL $2, $0\nNOP $0\nNOP $0\nNOP $0", core_size=SMALL)
        out = run_battle([w], small_config(3), seed=0, trace=True)
        assert [s.pc for s in out.trace][:3] == [0, 1, 2]

    def test_spl_respects_process_cap(self):
        w = parse("SPL $0, $0\nJMP $-1, $0", core_size=SMALL)
        out = run_battle([w], small_config(40, max_processes=4),
                         seed=0, trace=True)
        peak = max(s.processes for s in out.trace)
        assert peak == 4
        assert bool(out.survived[0])

    def test_dat_operand_side_effects(self):
        out = run_small("DAT <1, <2\nDAT #0, #0\nDAT #0, #0", 3)
        assert out.lifespans[0] == 0
        assert out.core[1, F_BV] == SMALL - 1
        assert out.core[2, F_BV] == SMALL - 1

    def test_a_field_indirect(self):
        src = "MOV.I *1, $4\nDAT.F $2, $0\nNOP $0\nDAT #9, #8\nDAT #0, #0"
        out = run_small(src, 1)
        assert out.core[4, F_OP] == Opcode.DAT
        assert out.core[4, F_AV] == 9
        assert out.core[4, F_BV] == 8

    def test_a_field_predecrement(self):
        out = run_small("DAT {1, $0\nDAT.F #5, #0", 2)
        assert out.core[1, F_AV] == 4

    def test_a_field_postincrement_self_reference(self):
        src = "MOV.B }0, $3\nDAT #0, #0\nDAT #0, #0\nDAT #0, #0"
        out = run_small(src, 1)
        # the snapshot sees A=0 (points at the executing cell), then the
        # live cell's A-field is bumped
        assert out.core[0, F_AV] == 1
        assert out.core[3, F_BV] == 3

    def test_b_field_postincrement(self):
        src = "MOV.AB #7, >1\nDAT.F #0, #2\nNOP $0\nDAT #0, #0"
        out = run_small(src, 1)
        assert out.core[1, F_BV] == 3
        assert out.core[3, F_BV] == 7


class TestBattles:
    def test_lone_imp_survives(self):
        imp = parse("MOV 0, 1", name="imp")
        out = run_battle([imp], MarsConfig(), seed=1)
        assert out.cycles == 80000
        assert bool(out.survived[0])
        assert out.lifespans[0] == 80000

    def test_lone_dat_dies_in_first_cycle(self):
        dat = parse("DAT #0, #0", name="dat")
        out = run_battle([dat], MarsConfig(), seed=1)
        assert out.cycles == 1
        assert not out.survived[0]
        assert out.lifespans[0] == 0

    def test_halt_when_one_left(self):
        imp = parse("MOV 0, 1", name="imp")
        dat = parse("DAT #0, #0", name="dat")
        out = run_battle([imp, dat], MarsConfig(), seed=3)
        assert out.cycles == 1
        assert out.winner == 0
        assert out.lifespans[0] == 80000  # survivor credited in full
        assert out.lifespans[1] == 0

    def test_first_death_halts_before_later_warriors_move(self):
        imp = parse("MOV 0, 1", name="imp")
        dat = parse("DAT #0, #0", name="dat")
        out = run_battle([dat, imp], MarsConfig(), seed=3)
        assert out.cycles == 1
        assert out.winner == 1
        assert out.touched[1].sum() == 0  # halted before the imp acted

    def test_rerun_bit_identical(self):
        imp = parse("MOV 0, 1", name="imp")
        dwarf = parse(
            "ORG start\nbomb DAT #0, #0\nstart ADD #4, bomb\n"
            "MOV bomb, @bomb\nJMP start", name="dwarf")
        cfg = MarsConfig(max_cycles=4000)
        a = run_battle([imp, dwarf], cfg, seed=11, trace=True)
        b = run_battle([imp, dwarf], cfg, seed=11, trace=True)
        assert a.positions == b.positions
        assert np.array_equal(a.lifespans, b.lifespans)
        assert np.array_equal(a.touched, b.touched)
        assert np.array_equal(a.core, b.core)
        assert [s.to_dict() for s in a.trace] == [s.to_dict() for s in b.trace]

    def test_rejects_overlong_warrior(self):
        w = parse("\n".join("MOV 0, 1" for _ in range(5)))
        with pytest.raises(ConfigError):
            run_battle([w], small_config(10, max_warrior_length=4))

    def test_rejects_empty_battle(self):
        with pytest.raises(ConfigError):
            run_battle([], MarsConfig())


class TestPlacement:
    def test_first_at_zero_and_separated(self):
        cfg = MarsConfig()
        rng = random.Random(9)
        for _ in range(200):
            positions = place_warriors([100, 100, 100, 100], cfg, rng)
            assert positions[0] == 0
            for i in range(4):
                for j in range(i + 1, 4):
                    d = abs(positions[i] - positions[j]) % 8000
                    assert min(d, 8000 - d) >= 100

    def test_impossible_placement(self):
        cfg = MarsConfig(core_size=64, max_warrior_length=16,
                         min_separation=16)
        with pytest.raises(PlacementError):
            place_warriors([16] * 5, cfg, random.Random(0))

    def test_deterministic(self):
        cfg = MarsConfig()
        a = place_warriors([10, 10, 10], cfg, random.Random(5))
        b = place_warriors([10, 10, 10], cfg, random.Random(5))
        assert a == b


def brute_force_fitness(masks):
    """Straight transcription of the survival-share sum, one timestep at a
    time; kept deliberately independent of the library implementation."""
    n, total = masks.shape
    out = [0.0] * n
    for t in range(total):
        denom = sum(int(masks[i][t]) for i in range(n))
        if denom == 0:
            continue
        for i in range(n):
            if masks[i][t]:
                out[i] += 1.0 / denom
    return [v * n / total for v in out]


class TestFitness:
    def test_matches_brute_force_on_random_masks(self):
        rng = np.random.default_rng(1234)
        for _ in range(300):
            masks = (rng.random((2, 100)) < 0.6).astype(np.float64)
            got = fitness_from_masks(masks)
            want = brute_force_fitness(masks)
            assert abs(got[0] - want[0]) < 1e-12
            assert abs(got[1] - want[1]) < 1e-12

    def test_mutual_survival_is_exactly_one(self):
        masks = np.ones((2, 100))
        f = fitness_from_masks(masks)
        assert f[0] == 1.0 and f[1] == 1.0

    def test_half_time_survivor_worked_example(self):
        f = fitness_from_lifespans([100, 50], 100)
        assert f[0] == pytest.approx(1.5)
        assert f[1] == pytest.approx(0.5)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_sum_never_exceeds_population(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        masks = (rng.random((n, 60)) < rng.random()).astype(np.float64)
        assert fitness_from_masks(masks).sum() <= n + 1e-9

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_lifespan_path_matches_mask_path(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 6))
        total = int(rng.integers(1, 200))
        spans = rng.integers(0, total + 1, n)
        via_masks = fitness_from_masks(masks_from_lifespans(spans, total))
        via_spans = fitness_from_lifespans(spans, total)
        assert np.allclose(via_masks, via_spans, atol=1e-9)

    def test_all_dead_timesteps_pay_nothing(self):
        f = fitness_from_lifespans([10, 10], 100)
        assert f.sum() == pytest.approx(2 * 10 / 100)


class TestEvaluate:
    def test_imp_crushes_dat(self):
        imp = parse("MOV 0, 1", name="imp")
        dat = parse("DAT #0, #0", name="dat")
        cfg = MarsConfig(rounds_per_pair=2)
        ev = evaluate(imp, [dat], cfg, seed=0)
        assert ev.wins == 2 and ev.losses == 0 and ev.ties == 0
        assert ev.fitness == 2.0
        assert ev.tsp == 80000.0  # one instruction, full-credit lifespan
        assert ev.per_opponent[0].win_or_tie

    def test_dat_loses_everything(self):
        imp = parse("MOV 0, 1", name="imp")
        dat = parse("DAT #0, #0", name="dat")
        cfg = MarsConfig(rounds_per_pair=2)
        ev = evaluate(dat, [imp], cfg, seed=0)
        assert ev.losses == 2 and ev.wins == 0
        assert ev.fitness == 0.0
        assert ev.tsp == 0.0
        assert not ev.per_opponent[0].win_or_tie

    def test_imp_mirror_ties(self):
        imp = parse("MOV 0, 1", name="imp")
        cfg = MarsConfig(max_cycles=2000, rounds_per_pair=4)
        ev = evaluate(imp, [imp], cfg, seed=0)
        assert ev.ties == 4
        assert ev.fitness == 1.0

    def test_requires_opponents(self):
        imp = parse("MOV 0, 1", name="imp")
        with pytest.raises(ValueError):
            evaluate(imp, [], MarsConfig(), seed=0)

    def test_battle_seed_is_stable_and_distinct(self):
        a = battle_seed(7, "aa", 0)
        assert a == battle_seed(7, "aa", 0)
        assert a != battle_seed(7, "aa", 1)
        assert a != battle_seed(8, "aa", 0)
        assert a != battle_seed(7, "ab", 0)

    def test_deterministic(self):
        imp = parse("MOV 0, 1", name="imp")
        dwarf = parse(
            "ORG start\nbomb DAT #0, #0\nstart ADD #4, bomb\n"
            "MOV bomb, @bomb\nJMP start", name="dwarf")
        cfg = MarsConfig(max_cycles=4000, rounds_per_pair=4)
        a = evaluate(dwarf, [imp], cfg, seed=3)
        b = evaluate(dwarf, [imp], cfg, seed=3)
        assert a == b
