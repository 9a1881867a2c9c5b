"""Trial orchestration.

One trial runs every node of an experiment to completion and persists the
artifacts a report needs: per-node archives, per-round logs with virtual
completion times, per-round generality of each champion, and merged
archive metrics.  Solo runs loop directly; multi-node runs execute over
the simulated network, each node's round completing at its own virtual
time (no synchronization barrier between nodes).
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from functools import partial
from pathlib import Path

from ..archive import Archive, merge
from ..archive.io import save_archive
from ..drq import DrqNode, NodeConfig, RoundReport
from ..gossip import SimNetwork, new_peer_id
from ..mars import MarsConfig
from .generality import generality, load_corpus, load_pool_seeds
from .spec import ExperimentSpec, SpecError, save_spec

MESH_WARMUP = 2.0  # virtual seconds of heartbeats before the first round


class BudgetMismatch(RuntimeError):
    """A node's logged operator calls disagree with its configuration."""


def stable_seed(*parts) -> int:
    digest = hashlib.blake2b(
        "|".join(str(p) for p in parts).encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class TrialResult:
    trial_seed: int
    node_ids: list[str]
    reports: dict[str, list[RoundReport]]
    archives: dict[str, Archive]
    generality_curves: dict[str, list[float | None]]
    completion_times: dict[str, list[float]]
    merged_rounds: list[dict]
    corpus_hashes: list[str]

    def to_dict(self) -> dict:
        return {
            "trial_seed": self.trial_seed,
            "nodes": self.node_ids,
            "generality": self.generality_curves,
            "completion_times": self.completion_times,
            "merged_rounds": self.merged_rounds,
            "corpus_hashes": self.corpus_hashes,
            "budget": {
                "per_node": {n: sum(r.calls for r in reps)
                             for n, reps in self.reports.items()},
                "total": sum(r.calls
                             for reps in self.reports.values() for r in reps),
            },
        }


def _build_nodes(spec: ExperimentSpec, trial_seed: int, seeds, feeds) -> dict:
    nodes = {}
    for node_spec in spec.nodes:
        cfg = NodeConfig(
            node_id=node_spec.node_id,
            rounds=spec.rounds,
            iters_per_round=spec.iters_per_round,
            p_new=spec.p_new,
            champion_window=spec.champion_window,
            topic=spec.topic,
            rng_seed=stable_seed("node", spec.name, trial_seed,
                                 node_spec.node_id),
        )
        nodes[node_spec.node_id] = DrqNode(
            cfg,
            operator=node_spec.operator.build(spec.mars),
            seeds=seeds,
            mars_config=spec.mars,
            feed=feeds.get(node_spec.node_id),
        )
    return nodes


def run_trial(spec: ExperimentSpec, trial_seed: int,
              out_dir: str | Path | None = None) -> TrialResult:
    mars = spec.mars
    seeds = load_pool_seeds(spec.seeds_dir, mars)
    corpus = load_corpus(spec.corpus_dir, mars)
    seed_hashes = {w.content_hash() for w in seeds}
    corpus_hashes = [w.content_hash() for w in corpus]
    if seed_hashes & set(corpus_hashes):
        raise SpecError("held-out corpus overlaps the starter pool")

    snapshots: dict[str, list[Archive]] = {n.node_id: [] for n in spec.nodes}
    times: dict[str, list[float]] = {n.node_id: [] for n in spec.nodes}

    if len(spec.nodes) == 1:
        node_spec = spec.nodes[0]
        nodes = _build_nodes(spec, trial_seed, seeds, feeds={})
        node = nodes[node_spec.node_id]
        for r in range(1, spec.rounds + 1):
            node.run_round()
            snapshots[node_spec.node_id].append(node.archive.copy())
            times[node_spec.node_id].append(
                r * spec.iters_per_round * node_spec.call_latency)
    else:
        net = SimNetwork(
            seed=stable_seed("net", spec.name, trial_seed),
            latency_range=spec.network.latency_range,
            drop_rate=spec.network.drop_rate,
        )
        feeds = {}
        for node_spec in spec.nodes:
            peer_id = new_peer_id(random.Random(
                stable_seed("peer", spec.name, trial_seed, node_spec.node_id)))
            feeds[node_spec.node_id] = net.spawn_node(
                peer_id, topics=(spec.topic,))
        net.introduce_all()
        net.start_heartbeats()
        nodes = _build_nodes(spec, trial_seed, seeds, feeds)

        def complete_round(node_id: str) -> None:
            node = nodes[node_id]
            node.run_round()
            snapshots[node_id].append(node.archive.copy())
            times[node_id].append(net.now)

        # a round's calls occupy the node for T * call_latency virtual
        # seconds, so round r completes at WARMUP + r * T * latency
        horizon = MESH_WARMUP
        for r in range(1, spec.rounds + 1):
            for node_spec in spec.nodes:
                at = (MESH_WARMUP
                      + r * spec.iters_per_round * node_spec.call_latency)
                net.schedule(at, partial(complete_round, node_spec.node_id))
                horizon = max(horizon, at)
        net.run_until(horizon + 1.0)

    reports = {nid: list(node.reports) for nid, node in nodes.items()}
    for node_spec in spec.nodes:
        logged = sum(r.calls for r in reports[node_spec.node_id])
        expected = spec.rounds * spec.iters_per_round
        actual = nodes[node_spec.node_id].calls_used
        if logged != expected or actual != expected:
            raise BudgetMismatch(
                f"node {node_spec.node_id}: configured {expected} calls, "
                f"logged {logged}, issued {actual}")

    gen_seed = stable_seed("generality", trial_seed)
    gen_cache: dict[str, float] = {}
    curves: dict[str, list[float | None]] = {}
    for nid, node in nodes.items():
        by_round = {c.round_index: c for c in node.champions}
        curve: list[float | None] = []
        for r in range(1, spec.rounds + 1):
            champ = by_round.get(r)
            if champ is None:
                curve.append(None)
                continue
            digest = champ.content_hash
            if digest not in gen_cache:
                gen_cache[digest] = generality(
                    champ.warrior, corpus, mars, gen_seed)
            curve.append(gen_cache[digest])
        curves[nid] = curve

    merged_rounds = []
    for r in range(spec.rounds):
        merged = merge([snapshots[n.node_id][r] for n in spec.nodes])
        merged_rounds.append({"coverage": merged.coverage(),
                              "qd_score": merged.qd_score()})

    result = TrialResult(
        trial_seed=trial_seed,
        node_ids=[n.node_id for n in spec.nodes],
        reports=reports,
        archives={nid: node.archive for nid, node in nodes.items()},
        generality_curves=curves,
        completion_times=times,
        merged_rounds=merged_rounds,
        corpus_hashes=corpus_hashes,
    )
    if out_dir is not None:
        _persist_trial(spec, result, Path(out_dir))
    return result


def _persist_trial(spec: ExperimentSpec, result: TrialResult,
                   out_dir: Path) -> None:
    trial_dir = out_dir / f"trial-{result.trial_seed}"
    for nid in result.node_ids:
        node_dir = trial_dir / f"node-{nid}"
        node_dir.mkdir(parents=True, exist_ok=True)
        save_archive(result.archives[nid], str(node_dir / "archive.jsonl"))
        lines = []
        for report, at in zip(result.reports[nid],
                              result.completion_times[nid]):
            row = report.to_dict()
            row["completed_at"] = at
            lines.append(_canonical(row))
        (node_dir / "rounds.jsonl").write_text("\n".join(lines) + "\n")
    (trial_dir / "trial.json").write_text(
        json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")


def run_experiment(spec: ExperimentSpec,
                   out_dir: str | Path) -> list[TrialResult]:
    """Run every trial seed and persist all artifacts under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_spec(spec, out / "experiment.json")
    return [run_trial(spec, ts, out) for ts in spec.trial_seeds]
