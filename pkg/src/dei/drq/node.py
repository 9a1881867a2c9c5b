"""The per-node co-evolution loop.

Each round freezes the opponent pool, spends exactly `iters_per_round`
operator calls (failures included) filling the archive, selects and
publishes a champion, then drains received peer champions into the pool
and archive for the next round.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from typing import Sequence

from ..archive import Archive, BcGrid, Elite, niche_novelty
from ..mars import ConfigError, MarsConfig, evaluate
from ..mutation import (
    MODE_MUTATE,
    MODE_NEW,
    MutationOperator,
    OperatorFailure,
    PromptContext,
    default_rules,
)
from ..redcode import Warrior
from .champion import Champion, ChampionDecodeError, champion_from_bytes
from .config import NodeConfig
from .pool import OpponentPool

log = logging.getLogger(__name__)


def round_seed(node_seed: int, round_index: int) -> int:
    """Shared evaluation seed for everything scored within one round."""
    digest = hashlib.blake2b(
        f"round|{node_seed}|{round_index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class IterationLog:
    index: int
    mode: str
    ok: bool
    warrior_hash: str | None = None
    fitness: float | None = None
    accepted: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "mode": self.mode,
            "ok": self.ok,
            "warrior_hash": self.warrior_hash,
            "fitness": self.fitness,
            "accepted": self.accepted,
            "error": self.error,
        }


@dataclass(frozen=True)
class RoundReport:
    node_id: str
    round_index: int
    calls: int
    failures: int
    accepted: int
    champion_hash: str | None
    champion_fitness: float | None
    coverage: float
    qd_score: float
    niche_novelty: float | None
    pool_size: int
    received: int
    iterations: tuple[IterationLog, ...] = field(repr=False, default=())

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "round": self.round_index,
            "calls": self.calls,
            "failures": self.failures,
            "accepted": self.accepted,
            "champion_hash": self.champion_hash,
            "champion_fitness": self.champion_fitness,
            "coverage": self.coverage,
            "qd_score": self.qd_score,
            "niche_novelty": self.niche_novelty,
            "pool_size": self.pool_size,
            "received": self.received,
            "iterations": [it.to_dict() for it in self.iterations],
        }


def select_champion(
    archive: Archive,
    opponents: Sequence[Warrior],
    config: MarsConfig,
    seed: int,
    node_id: str = "",
    round_index: int = 0,
) -> Champion:
    """Re-score every elite against the full current pool with one shared
    seed and return the best; lexicographic cell order breaks exact ties."""
    best: tuple[float, Champion] | None = None
    for elite in archive.elites():  # sorted by cell: first seen wins ties
        scored = evaluate(elite.warrior, list(opponents), config, seed)
        if best is None or scored.fitness > best[0]:
            best = (
                scored.fitness,
                Champion(
                    warrior=elite.warrior,
                    fitness=scored.fitness,
                    bc=scored.bc,
                    round_index=round_index,
                    node_id=node_id,
                ),
            )
    if best is None:
        raise LookupError("cannot select a champion from an empty archive")
    return best[1]


class ChampionFeed:
    """What the loop needs from the messaging layer. The gossip engine
    satisfies it directly; solo runs use None."""

    def publish(self, topic: str, payload: bytes) -> None:
        raise NotImplementedError

    def drain(self) -> list:
        raise NotImplementedError


class DrqNode:
    def __init__(
        self,
        config: NodeConfig,
        operator: MutationOperator,
        seeds: Sequence[Warrior],
        mars_config: MarsConfig | None = None,
        grid: BcGrid | None = None,
        feed=None,
        rules_digest: str | None = None,
    ):
        self.config = config
        self.operator = operator
        self.mars = mars_config or MarsConfig()
        self.grid = grid or BcGrid.for_battle_limits(
            self.mars.max_warrior_length, self.mars.max_cycles
        )
        self.archive = Archive(self.grid)
        self.pool = OpponentPool(list(seeds), config.champion_window)
        self.feed = feed
        self.rules = rules_digest if rules_digest is not None else default_rules()
        self.rng = random.Random(config.rng_seed)
        self.calls_used = 0
        self.round_index = 0
        self.reports: list[RoundReport] = []
        self.champions: list[Champion] = []
        self._known_hashes: set[str] = set()

    # -- one round -------------------------------------------------------

    def run_round(self) -> RoundReport:
        self.round_index += 1
        r = self.round_index
        opponents = list(self.pool.warriors())  # frozen for the whole round
        eval_seed = round_seed(self.config.rng_seed, r)
        iterations: list[IterationLog] = []
        failures = 0
        accepted_count = 0

        for index in range(self.config.iters_per_round):
            draw = self.rng.random()  # consumed every iteration
            call_seed = self.rng.randrange(2**63)
            fresh = not len(self.archive) or draw < self.config.p_new
            mode = MODE_NEW if fresh else MODE_MUTATE
            try:
                if fresh:
                    ctx = PromptContext(mode=MODE_NEW, rules_digest=self.rules)
                    candidate = self.operator.generate(ctx, call_seed)
                else:
                    parent = self.archive.sample_uniform(self.rng.randrange(2**63))
                    ctx = PromptContext(
                        mode=MODE_MUTATE,
                        rules_digest=self.rules,
                        parent=parent.warrior,
                        parent_fitness=parent.fitness,
                        parent_bc=parent.bc,
                    )
                    candidate = self.operator.mutate(ctx, call_seed)
            except OperatorFailure as err:
                self.calls_used += 1
                failures += 1
                iterations.append(
                    IterationLog(index=index, mode=mode, ok=False, error=str(err))
                )
                log.info("%s r%d i%d: operator failed: %s",
                         self.config.node_id, r, index, err)
                continue
            self.calls_used += 1
            scored = evaluate(candidate, opponents, self.mars, eval_seed)
            accepted = self.archive.update(
                candidate, scored.fitness, scored.bc,
                round_index=r, origin=self.operator.identity,
            )
            accepted_count += int(accepted)
            iterations.append(
                IterationLog(
                    index=index,
                    mode=mode,
                    ok=True,
                    warrior_hash=candidate.content_hash(),
                    fitness=scored.fitness,
                    accepted=accepted,
                )
            )

        champion = None
        if len(self.archive):
            champion = select_champion(
                self.archive, opponents, self.mars, eval_seed,
                node_id=self.config.node_id, round_index=r,
            )
            self.champions.append(champion)
            self.pool.add_own_champion(champion.warrior)
            self._known_hashes.add(champion.content_hash)
            if self.feed is not None:
                self.feed.publish(self.config.topic, champion.to_bytes())

        received = self._drain_champions()
        novelty = self._integrate(received, opponents, eval_seed, r)

        report = RoundReport(
            node_id=self.config.node_id,
            round_index=r,
            calls=self.config.iters_per_round,
            failures=failures,
            accepted=accepted_count,
            champion_hash=champion.content_hash if champion else None,
            champion_fitness=champion.fitness if champion else None,
            coverage=self.archive.coverage(),
            qd_score=self.archive.qd_score(),
            niche_novelty=novelty,
            pool_size=len(self.pool),
            received=len(received),
            iterations=tuple(iterations),
        )
        self.reports.append(report)
        return report

    def run(self) -> list[RoundReport]:
        while self.round_index < self.config.rounds:
            self.run_round()
        return self.reports

    # -- receive path ---------------------------------------------------------

    def _drain_champions(self) -> list[Champion]:
        if self.feed is None:
            return []
        out: list[Champion] = []
        for msg in self.feed.drain():
            payload = msg.payload if hasattr(msg, "payload") else msg
            try:
                champion = champion_from_bytes(payload, core_size=self.mars.core_size)
            except ChampionDecodeError as err:
                log.warning("%s: dropping bad champion payload: %s",
                            self.config.node_id, err)
                continue
            out.append(champion)
        return out

    def _integrate(
        self,
        received: list[Champion],
        opponents: Sequence[Warrior],
        eval_seed: int,
        r: int,
    ) -> float | None:
        """De-duplicate, re-measure locally, extend the pool, and seed the
        archive. Novelty is judged against the archive as it stood before
        any received champion was seeded."""
        fresh: list[Champion] = []
        for champion in received:
            digest = champion.content_hash
            if digest in self._known_hashes:
                continue
            if len(champion.warrior) > self.mars.max_warrior_length:
                log.warning("%s: dropping oversized champion from %s",
                            self.config.node_id, champion.node_id)
                continue
            self._known_hashes.add(digest)
            fresh.append(champion)
        if not fresh:
            return None

        snapshot = self.archive.copy()
        measured: list[tuple[Warrior, float, object]] = []
        as_elites: list[Elite] = []
        for champion in fresh:
            scored = evaluate(champion.warrior, list(opponents), self.mars, eval_seed)
            measured.append((champion.warrior, scored.fitness, scored.bc))
            as_elites.append(
                Elite(
                    warrior=champion.warrior,
                    fitness=scored.fitness,
                    bc=scored.bc,
                    cell=self.grid.bin(scored.bc),
                    round=r,
                    origin=champion.warrior.origin,
                )
            )
            self.pool.add_peer_champion(champion.warrior)
        novelty = niche_novelty(as_elites, snapshot)
        self.archive.seed_champions(measured, round_index=r)
        return novelty
