"""Topic-mesh gossip engine: eager push within a bounded-degree mesh,
lazy IHAVE/IWANT recovery outside it, heartbeat-driven mesh repair.

The engine is passive: the owning runtime feeds it received bytes and
heartbeat ticks, and it emits sends through a pluggable transport. publish()
and drain() are non-blocking and safe to call from the application thread
while a transport thread drives handle_bytes().
"""

from __future__ import annotations

import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

from . import wire
from .wire import Envelope, WireError

log = logging.getLogger(__name__)


class TransportDown(RuntimeError):
    """The whole transport is unusable; surfaces to the publisher."""


class PeerSendError(RuntimeError):
    """A single peer could not be reached; logged, never raised to callers."""


class Transport(Protocol):
    def send(self, dest: str, data: bytes) -> None: ...


@dataclass(frozen=True)
class GossipConfig:
    degree: int = 3
    degree_high: int = 5
    gossip_fanout: int = 2
    heartbeat_interval: float = 1.0
    mcache_ttl: float = 120.0
    seen_ttl: float = 120.0
    max_message_size: int = 64 * 1024

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.degree_high < self.degree:
            raise ValueError("degree_high must be >= degree")
        if self.gossip_fanout < 0:
            raise ValueError("gossip_fanout must be >= 0")
        if self.heartbeat_interval <= 0 or self.mcache_ttl <= 0 or self.seen_ttl <= 0:
            raise ValueError("intervals must be positive")
        if self.max_message_size < 1:
            raise ValueError("max_message_size must be >= 1")


@dataclass(frozen=True)
class GossipMessage:
    message_id: str
    topic: str
    payload: bytes
    sender: str


@dataclass(frozen=True)
class ControlMessage:
    kind: str
    dest: str
    topic: str = ""
    ids: tuple[str, ...] = ()


class GossipNode:
    def __init__(
        self,
        peer_id: str,
        transport: Transport,
        config: GossipConfig | None = None,
        topics: tuple[str, ...] = (),
        clock: Callable[[], float] = time.monotonic,
        rng_seed: int = 0,
    ):
        self.peer_id = wire.require_peer_id(peer_id)
        self.transport = transport
        self.config = config or GossipConfig()
        self.clock = clock
        self._rng = random.Random(rng_seed)
        self._seq = 0
        self.known_peers: set[str] = set()
        self.mesh: dict[str, set[str]] = {}
        self._seen: dict[str, float] = {}
        self._mcache: dict[str, tuple[str, bytes, float]] = {}  # id -> (topic, envelope, expiry)
        self._buffer: list[GossipMessage] = []
        self._lock = threading.Lock()
        for topic in topics:
            self.join(topic)

    # -- membership ---------------------------------------------------------

    def join(self, topic: str) -> None:
        if topic not in self.mesh:
            self.mesh[topic] = set()
            self._repair_mesh(topic)

    def leave(self, topic: str) -> None:
        for peer in sorted(self.mesh.pop(topic, ())):
            self._send(peer, wire.encode_prune(self.peer_id, topic))

    def topics(self) -> tuple[str, ...]:
        return tuple(sorted(self.mesh))

    def add_peer(self, peer_id: str) -> None:
        peer_id = wire.require_peer_id(peer_id)
        if peer_id != self.peer_id:
            self.known_peers.add(peer_id)

    def remove_peer(self, peer_id: str) -> None:
        self.known_peers.discard(peer_id)
        for peers in self.mesh.values():
            peers.discard(peer_id)

    # -- application surface -------------------------------------------------

    def publish(self, topic: str, payload: bytes) -> str:
        """Eager-push to the topic mesh; returns the message id immediately.

        Delivery is best-effort: per-peer failures are logged, and peers
        outside the mesh recover via IHAVE/IWANT.
        """
        if topic not in self.mesh:
            raise ValueError(f"not joined to topic {topic!r}")
        if len(payload) > self.config.max_message_size:
            raise ValueError(
                f"payload of {len(payload)} bytes exceeds {self.config.max_message_size}"
            )
        self._seq += 1
        envelope = wire.encode_message(self.peer_id, self._seq, topic, payload)
        mid = wire.compute_message_id(self.peer_id, self._seq, topic, payload)
        now = self.clock()
        self._seen[mid] = now + self.config.seen_ttl
        self._mcache[mid] = (topic, envelope, now + self.config.mcache_ttl)
        targets = sorted(self.mesh[topic])
        if not targets and self.known_peers:
            # before the first repair the mesh can be empty; push to a random
            # degree-sized sample so early publishes are not stranded
            candidates = sorted(self.known_peers)
            targets = self._rng.sample(candidates, min(self.config.degree, len(candidates)))
        for peer in targets:
            self._send(peer, envelope)
        return mid

    def drain(self) -> list[GossipMessage]:
        with self._lock:
            out = self._buffer
            self._buffer = []
        return out

    # -- transport surface ----------------------------------------------------

    def handle_bytes(self, data: bytes, from_peer: str | None = None) -> None:
        try:
            env = wire.decode(data)
        except WireError as err:
            log.warning("%s: dropping undecodable envelope: %s", self.peer_id[:8], err)
            return
        if env.sender == self.peer_id:
            return
        self.add_peer(env.sender)
        if from_peer and wire.is_peer_id(from_peer):
            self.add_peer(from_peer)
        if env.kind == wire.KIND_MESSAGE:
            self._on_message(env, from_peer or env.sender)
        elif env.kind == wire.KIND_IHAVE:
            self._on_ihave(env)
        elif env.kind == wire.KIND_IWANT:
            self._on_iwant(env)
        elif env.kind == wire.KIND_GRAFT:
            self._on_graft(env)
        elif env.kind == wire.KIND_PRUNE:
            self.mesh.get(env.topic, set()).discard(env.sender)

    def _on_message(self, env: Envelope, forwarder: str) -> None:
        now = self.clock()
        if env.message_id in self._seen and self._seen[env.message_id] > now:
            return
        self._seen[env.message_id] = now + self.config.seen_ttl
        if env.topic not in self.mesh:
            return
        envelope = wire.encode_message(env.sender, env.seq, env.topic, env.body)
        self._mcache[env.message_id] = (env.topic, envelope, now + self.config.mcache_ttl)
        with self._lock:
            self._buffer.append(
                GossipMessage(
                    message_id=env.message_id,
                    topic=env.topic,
                    payload=env.body,
                    sender=env.sender,
                )
            )
        for peer in sorted(self.mesh[env.topic] - {forwarder, env.sender}):
            self._send(peer, envelope)

    def _on_ihave(self, env: Envelope) -> None:
        if env.topic not in self.mesh:
            return
        now = self.clock()
        missing = tuple(
            mid for mid in env.ids
            if not (mid in self._seen and self._seen[mid] > now)
        )
        if missing:
            self._send(env.sender, wire.encode_iwant(self.peer_id, missing))

    def _on_iwant(self, env: Envelope) -> None:
        now = self.clock()
        for mid in env.ids:
            held = self._mcache.get(mid)
            if held and held[2] > now:
                self._send(env.sender, held[1])

    def _on_graft(self, env: Envelope) -> None:
        peers = self.mesh.get(env.topic)
        if peers is None or len(peers) >= self.config.degree_high:
            self._send(env.sender, wire.encode_prune(self.peer_id, env.topic))
            return
        peers.add(env.sender)

    # -- heartbeat -------------------------------------------------------------

    def heartbeat(self) -> list[ControlMessage]:
        """Expire caches, repair every topic mesh toward the target degree,
        and gossip IHAVE digests to a few non-mesh peers."""
        now = self.clock()
        self._seen = {mid: exp for mid, exp in self._seen.items() if exp > now}
        self._mcache = {mid: held for mid, held in self._mcache.items() if held[2] > now}
        emitted: list[ControlMessage] = []
        for topic in sorted(self.mesh):
            emitted.extend(self._repair_mesh(topic))
            emitted.extend(self._emit_gossip(topic))
        return emitted

    def _repair_mesh(self, topic: str) -> list[ControlMessage]:
        cfg = self.config
        peers = self.mesh[topic]
        peers &= self.known_peers
        emitted = []
        if len(peers) < cfg.degree:
            candidates = sorted(self.known_peers - peers)
            wanted = min(cfg.degree - len(peers), len(candidates))
            for peer in self._rng.sample(candidates, wanted):
                peers.add(peer)
                self._send(peer, wire.encode_graft(self.peer_id, topic))
                emitted.append(ControlMessage(kind="GRAFT", dest=peer, topic=topic))
        elif len(peers) > cfg.degree_high:
            extras = self._rng.sample(sorted(peers), len(peers) - cfg.degree)
            for peer in extras:
                peers.discard(peer)
                self._send(peer, wire.encode_prune(self.peer_id, topic))
                emitted.append(ControlMessage(kind="PRUNE", dest=peer, topic=topic))
        self.mesh[topic] = peers
        return emitted

    def _emit_gossip(self, topic: str) -> list[ControlMessage]:
        now = self.clock()
        ids = tuple(
            mid for mid, (held_topic, _, expiry) in self._mcache.items()
            if held_topic == topic and expiry > now
        )[: wire.MAX_IHAVE_IDS]
        if not ids:
            return []
        candidates = sorted(self.known_peers - self.mesh[topic])
        chosen = self._rng.sample(candidates, min(self.config.gossip_fanout, len(candidates)))
        emitted = []
        for peer in chosen:
            self._send(peer, wire.encode_ihave(self.peer_id, topic, ids))
            emitted.append(ControlMessage(kind="IHAVE", dest=peer, topic=topic, ids=ids))
        return emitted

    # -- internals ---------------------------------------------------------------

    def _send(self, dest: str, data: bytes) -> None:
        try:
            self.transport.send(dest, data)
        except PeerSendError as err:
            log.info("%s: send to %s failed: %s", self.peer_id[:8], dest[:8], err)
