"""The opponent pool a node evaluates against: seed warriors, a ring of its
own recent round champions, and every champion collected from peers."""

from __future__ import annotations

from ..redcode import Warrior


class OpponentPool:
    def __init__(self, seeds: list[Warrior], champion_window: int | None = 5):
        if not seeds:
            raise ValueError("opponent pool requires at least one seed warrior")
        if champion_window is not None and champion_window < 0:
            raise ValueError("champion_window must be >= 0 or None")
        self.seeds: tuple[Warrior, ...] = tuple(seeds)
        self.champion_window = champion_window
        self._own: list[Warrior] = []
        self._peers: list[Warrior] = []
        self._peer_hashes: set[str] = set()

    def add_own_champion(self, warrior: Warrior) -> None:
        self._own.append(warrior)
        if self.champion_window is not None and len(self._own) > self.champion_window:
            del self._own[: len(self._own) - self.champion_window]

    def add_peer_champion(self, warrior: Warrior) -> bool:
        """Append a received champion; returns False for a content duplicate."""
        digest = warrior.content_hash()
        if digest in self._peer_hashes:
            return False
        self._peer_hashes.add(digest)
        self._peers.append(warrior)
        return True

    def own_champions(self) -> tuple[Warrior, ...]:
        return tuple(self._own)

    def peer_champions(self) -> tuple[Warrior, ...]:
        return tuple(self._peers)

    def warriors(self) -> tuple[Warrior, ...]:
        """Deterministic union: seeds, then own ring oldest-first, then peers
        in arrival order; de-duplicated by content hash, first wins."""
        seen: set[str] = set()
        out: list[Warrior] = []
        for warrior in (*self.seeds, *self._own, *self._peers):
            digest = warrior.content_hash()
            if digest in seen:
                continue
            seen.add(digest)
            out.append(warrior)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.warriors())
