"""Survival-share fitness and behavioral measurements.

A warrior's fitness over one battle is its time-averaged share of the living
population: at each timestep every live warrior splits that timestep's unit
of credit evenly, dead warriors get nothing, and timesteps where everyone is
dead pay out nothing.  The total is normalized so that a battle where all N
warriors survive the whole time gives each exactly 1.0, and the sum over
warriors never exceeds N.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..redcode.insn import Warrior
from .config import MarsConfig
from .vm import BattleOutcome, run_battle


@dataclass(frozen=True)
class BehavioralCharacteristic:
    """Where a warrior sits in behavior space: time-space product (code
    length times mean lifespan) and memory coverage (fraction of core
    touched), both averaged over the battles of one evaluation."""

    tsp: float
    mc: float

    def __post_init__(self) -> None:
        if self.tsp < 0:
            raise ValueError("tsp must be non-negative")
        if not 0.0 <= self.mc <= 1.0:
            raise ValueError("mc must be within [0, 1]")


def fitness_from_masks(masks: np.ndarray) -> np.ndarray:
    """Fitness for all warriors from an explicit (n, timesteps) alive mask."""
    masks = np.asarray(masks, dtype=np.float64)
    if masks.ndim != 2:
        raise ValueError("masks must be two-dimensional")
    n, total = masks.shape
    denom = masks.sum(axis=0)
    live = denom > 0
    shares = masks[:, live] / denom[live]
    return shares.sum(axis=1) * n / total


def masks_from_lifespans(lifespans, total: int) -> np.ndarray:
    spans = np.asarray(lifespans, dtype=np.int64)
    return (np.arange(total)[None, :] < spans[:, None]).astype(np.float64)


def fitness_from_lifespans(lifespans, total: int) -> np.ndarray:
    """Same quantity as ``fitness_from_masks`` for prefix-shaped masks,
    computed per constant-population segment instead of per timestep."""
    spans = np.asarray(lifespans, dtype=np.int64)
    n = len(spans)
    bounds = np.unique(np.concatenate((spans, [0, total])))
    bounds = bounds[(bounds >= 0) & (bounds <= total)]
    out = np.zeros(n, dtype=np.float64)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        alive = spans > lo
        count = int(alive.sum())
        if count:
            out[alive] += (hi - lo) / count
    return out * n / total


def fitness(index: int, outcome: BattleOutcome) -> float:
    """Survival-share fitness of one battle participant."""
    return float(fitness_from_lifespans(outcome.lifespans, outcome.max_cycles)[index])


def battle_seed(master_seed: int, opponent_hash: str, round_index: int) -> int:
    """Derive the placement seed for one battle.

    Depends on the opponent's content but not the evaluated warrior's, so any
    two warriors scored against the same pool with the same master seed fight
    under identical placements.
    """
    tag = f"battle|{master_seed}|{opponent_hash}|{round_index}".encode()
    return int.from_bytes(hashlib.blake2b(tag, digest_size=8).digest(), "big")


@dataclass(frozen=True)
class OpponentRecord:
    opponent: str
    opponent_hash: str
    wins: int
    losses: int
    ties: int
    mean_fitness: float

    @property
    def win_or_tie(self) -> bool:
        return self.wins >= self.losses


@dataclass(frozen=True)
class Evaluation:
    """Aggregate of one warrior's battles against a pool of opponents."""

    fitness: float
    tsp: float
    mc: float
    wins: int
    losses: int
    ties: int
    battles: int
    mean_lifespan: float
    per_opponent: tuple[OpponentRecord, ...]

    @property
    def bc(self) -> BehavioralCharacteristic:
        return BehavioralCharacteristic(tsp=self.tsp, mc=self.mc)


def win_tie(warrior: Warrior, opponent: Warrior,
            config: MarsConfig | None = None, seed: int = 0) -> bool:
    """True when ``warrior`` wins at least as many rounds against
    ``opponent`` as it loses."""
    result = evaluate(warrior, [opponent], config, seed)
    return result.wins >= result.losses


def evaluate(warrior: Warrior, opponents: list[Warrior] | tuple[Warrior, ...],
             config: MarsConfig | None = None, seed: int = 0) -> Evaluation:
    """Score ``warrior`` against every opponent.

    Each pairing is fought ``rounds_per_pair`` times with the turn order
    swapped on odd rounds, cancelling the first-mover and fixed-placement
    advantages.  Fitness, lifespan, and core coverage are averaged over all
    battles; the time-space product is code length times mean lifespan.
    """
    config = config or MarsConfig()
    if not opponents:
        raise ValueError("opponent pool must not be empty")

    fitness_sum = 0.0
    lifespan_sum = 0
    mc_sum = 0.0
    records = []
    battles = 0
    for opponent in opponents:
        opp_hash = opponent.content_hash()
        wins = losses = ties = 0
        opp_fitness = 0.0
        for round_index in range(config.rounds_per_pair):
            pair_seed = battle_seed(seed, opp_hash, round_index)
            if round_index % 2 == 0:
                order, me = (warrior, opponent), 0
            else:
                order, me = (opponent, warrior), 1
            outcome = run_battle(order, config, pair_seed)
            f = fitness_from_lifespans(outcome.lifespans, config.max_cycles)
            fitness_sum += f[me]
            opp_fitness += f[me]
            lifespan_sum += int(outcome.lifespans[me])
            mc_sum += float(outcome.touched_fraction()[me])
            me_alive = bool(outcome.survived[me])
            opp_alive = bool(outcome.survived[1 - me])
            if me_alive and not opp_alive:
                wins += 1
            elif opp_alive and not me_alive:
                losses += 1
            else:
                ties += 1
            battles += 1
        records.append(OpponentRecord(
            opponent=opponent.name,
            opponent_hash=opp_hash,
            wins=wins,
            losses=losses,
            ties=ties,
            mean_fitness=opp_fitness / config.rounds_per_pair,
        ))

    mean_lifespan = lifespan_sum / battles
    return Evaluation(
        fitness=fitness_sum / battles,
        tsp=len(warrior) * mean_lifespan,
        mc=mc_sum / battles,
        wins=sum(r.wins for r in records),
        losses=sum(r.losses for r in records),
        ties=sum(r.ties for r in records),
        battles=battles,
        mean_lifespan=mean_lifespan,
        per_opponent=tuple(records),
    )
