"""Deterministic discrete-event network for in-process multi-node runs.

All randomness (latency draws, drops) comes from one seeded generator and
events are ordered by (time, insertion sequence), so a run is a pure
function of its seed. The simulated clock only advances when events fire;
wall-clock speed is unrelated to simulated latency.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

from .engine import GossipConfig, GossipNode, TransportDown


@dataclass(order=True)
class _Event:
    time: float
    seq: int
    fn: Callable[[], None] = field(compare=False)


class SimTransport:
    def __init__(self, net: "SimNetwork", src: str):
        self.net = net
        self.src = src

    def send(self, dest: str, data: bytes) -> None:
        self.net.deliver(self.src, dest, data)


class SimNetwork:
    def __init__(
        self,
        seed: int = 0,
        latency_range: tuple[float, float] = (0.005, 0.050),
        drop_rate: float = 0.0,
    ):
        if not 0 <= drop_rate < 1:
            raise ValueError("drop_rate must be in [0, 1)")
        lo, hi = latency_range
        if not 0 <= lo <= hi:
            raise ValueError("latency_range must be ordered and non-negative")
        self.seed = seed
        self.latency_range = latency_range
        self.drop_rate = drop_rate
        self.now = 0.0
        self._rng = random.Random(seed)
        self._queue: list[_Event] = []
        self._seq = 0
        self.nodes: dict[str, GossipNode] = {}
        self._online: set[str] = set()
        self.delivered_frames = 0
        self.dropped_frames = 0

    # -- construction -----------------------------------------------------

    def clock(self) -> float:
        return self.now

    def spawn_node(
        self,
        peer_id: str,
        topics: tuple[str, ...] = (),
        config: GossipConfig | None = None,
        rng_seed: int | None = None,
    ) -> GossipNode:
        if peer_id in self.nodes:
            raise ValueError(f"duplicate node {peer_id}")
        node = GossipNode(
            peer_id,
            transport=SimTransport(self, peer_id),
            config=config,
            topics=topics,
            clock=self.clock,
            rng_seed=self._rng.randrange(2**63) if rng_seed is None else rng_seed,
        )
        self.nodes[peer_id] = node
        self._online.add(peer_id)
        return node

    def introduce_all(self) -> None:
        """Full peer knowledge: every node learns every other node's id."""
        for node in self.nodes.values():
            for other in self.nodes:
                if other != node.peer_id:
                    node.add_peer(other)

    # -- churn ---------------------------------------------------------------

    def set_online(self, peer_id: str, online: bool) -> None:
        if peer_id not in self.nodes:
            raise KeyError(peer_id)
        if online:
            self._online.add(peer_id)
        else:
            self._online.discard(peer_id)

    def is_online(self, peer_id: str) -> bool:
        return peer_id in self._online

    # -- event machinery ---------------------------------------------------------

    def schedule(self, delay: float, fn: Callable[[], None]) -> None:
        if delay < 0:
            raise ValueError("delay must be non-negative")
        self._seq += 1
        heapq.heappush(self._queue, _Event(self.now + delay, self._seq, fn))

    def deliver(self, src: str, dest: str, data: bytes) -> None:
        if src not in self._online:
            raise TransportDown(f"node {src[:8]} is offline")
        if dest not in self.nodes:
            self.dropped_frames += 1
            return
        if self.drop_rate and self._rng.random() < self.drop_rate:
            self.dropped_frames += 1
            return
        latency = self._rng.uniform(*self.latency_range)

        def fire() -> None:
            # receiver must be online at arrival time, not at send time
            if dest in self._online:
                self.delivered_frames += 1
                self.nodes[dest].handle_bytes(data, from_peer=src)
            else:
                self.dropped_frames += 1

        self.schedule(latency, fire)

    def start_heartbeats(self, interval: float | None = None) -> None:
        """Recurring per-node heartbeats with seeded phase offsets."""
        for peer_id in sorted(self.nodes):
            period = interval or self.nodes[peer_id].config.heartbeat_interval
            phase = self._rng.uniform(0, period)
            self.schedule(phase, partial(self._heartbeat_tick, peer_id, period))

    def _heartbeat_tick(self, peer_id: str, period: float) -> None:
        if peer_id in self._online:
            self.nodes[peer_id].heartbeat()
        self.schedule(period, partial(self._heartbeat_tick, peer_id, period))

    def run_until(self, deadline: float) -> None:
        while self._queue and self._queue[0].time <= deadline:
            event = heapq.heappop(self._queue)
            self.now = event.time
            event.fn()
        self.now = max(self.now, deadline)

    def run_for(self, duration: float) -> None:
        self.run_until(self.now + duration)

    def pending_events(self) -> int:
        return len(self._queue)
