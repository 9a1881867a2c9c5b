"""Per-node loop configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass

DEFAULT_TOPIC = "champions"


@dataclass(frozen=True)
class NodeConfig:
    """Knobs for one node's evolve-publish-integrate loop.

    `champion_window` is the number of own round champions kept in the
    opponent pool; None keeps all of them. `p_new` is the probability of
    generating from scratch instead of mutating a sampled elite.
    """

    node_id: str
    rounds: int = 10
    iters_per_round: int = 250
    p_new: float = 0.1
    champion_window: int | None = 5
    topic: str = DEFAULT_TOPIC
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.node_id:
            raise ValueError("node_id must be non-empty")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.iters_per_round < 1:
            raise ValueError("iters_per_round must be >= 1")
        if not 0.0 <= self.p_new <= 1.0:
            raise ValueError("p_new must be in [0, 1]")
        if self.champion_window is not None and self.champion_window < 0:
            raise ValueError("champion_window must be >= 0 or None")
        if not self.topic:
            raise ValueError("topic must be non-empty")

    @property
    def total_calls(self) -> int:
        return self.rounds * self.iters_per_round

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NodeConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown node config keys: {sorted(unknown)}")
        return cls(**data)
