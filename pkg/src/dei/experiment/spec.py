"""Experiment definitions.

An experiment file describes one condition (solo, homogeneous, or diverse),
the node roster with one mutation operator each, the battle configuration,
and the simulated network. `docs/experiment-format.md` documents the JSON
layout field by field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..mars import MarsConfig
from ..mutation import (
    HttpChatBackend,
    LlmEndpointConfig,
    LlmOperator,
    MockOperator,
    MutationOperator,
    RecordingBackend,
    ReplayBackend,
)

CONDITIONS = ("solo", "homogeneous", "diverse")
OPERATOR_KINDS = ("mock", "llm", "replay")


class SpecError(ValueError):
    """Raised when an experiment definition is malformed."""


def _reject_unknown(data: dict, allowed: set[str], what: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise SpecError(f"unknown {what} fields: {sorted(unknown)}")


@dataclass(frozen=True)
class OperatorSpec:
    """How to build one node's mutation operator.

    kind "mock" draws from a biased opcode profile; "llm" calls a
    chat-completions endpoint (optionally recording the session); "replay"
    replays a recorded session without network access.
    """

    kind: str
    bias: str = "balanced"
    endpoint: LlmEndpointConfig | None = None
    session: str | None = None
    record: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in OPERATOR_KINDS:
            raise SpecError(f"operator kind must be one of {OPERATOR_KINDS}")
        if self.kind in ("llm", "replay") and self.endpoint is None:
            raise SpecError(f"operator kind {self.kind!r} requires an endpoint")
        if self.kind == "replay" and not self.session:
            raise SpecError("replay operator requires a session file")
        if self.kind != "llm" and self.record:
            raise SpecError("only llm operators can record")

    @property
    def identity(self) -> str:
        """Operator identity string, without building the operator."""
        if self.kind == "mock":
            return f"mock:{self.bias}"
        return f"llm:{self.endpoint.model_name}"

    def build(self, mars: MarsConfig) -> MutationOperator:
        if self.kind == "mock":
            return MockOperator(self.bias, core_size=mars.core_size,
                                max_warrior_length=mars.max_warrior_length)
        if self.kind == "replay":
            backend = ReplayBackend(self.session)
        else:
            backend = HttpChatBackend(self.endpoint)
            if self.record:
                backend = RecordingBackend(backend, self.record)
        return LlmOperator(self.endpoint, backend=backend,
                           core_size=mars.core_size,
                           max_warrior_length=mars.max_warrior_length)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "mock":
            out["bias"] = self.bias
        if self.endpoint is not None:
            out["endpoint"] = self.endpoint.to_dict()
        if self.session is not None:
            out["session"] = self.session
        if self.record is not None:
            out["record"] = self.record
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorSpec":
        _reject_unknown(data, {"kind", "bias", "endpoint", "session", "record"},
                        "operator")
        endpoint = data.get("endpoint")
        return cls(
            kind=data.get("kind", ""),
            bias=data.get("bias", "balanced"),
            endpoint=LlmEndpointConfig.from_dict(endpoint) if endpoint else None,
            session=data.get("session"),
            record=data.get("record"),
        )


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    operator: OperatorSpec
    call_latency: float = 1.0  # virtual seconds per operator call (sim mode)

    def __post_init__(self) -> None:
        if not self.node_id:
            raise SpecError("node_id must be non-empty")
        if self.call_latency <= 0:
            raise SpecError("call_latency must be positive")

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "operator": self.operator.to_dict(),
            "call_latency": self.call_latency,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NodeSpec":
        _reject_unknown(data, {"node_id", "operator", "call_latency"}, "node")
        if "operator" not in data:
            raise SpecError("node requires an operator")
        return cls(
            node_id=data.get("node_id", ""),
            operator=OperatorSpec.from_dict(data["operator"]),
            call_latency=data.get("call_latency", 1.0),
        )


@dataclass(frozen=True)
class NetworkSpec:
    """Simulated transport parameters shared by all in-process trials."""

    latency_range: tuple[float, float] = (0.005, 0.050)
    drop_rate: float = 0.0

    def __post_init__(self) -> None:
        lo, hi = self.latency_range
        if not 0 <= lo <= hi:
            raise SpecError("latency_range must be ordered and non-negative")
        if not 0 <= self.drop_rate < 1:
            raise SpecError("drop_rate must be in [0, 1)")

    def to_dict(self) -> dict:
        return {"latency_range": list(self.latency_range),
                "drop_rate": self.drop_rate}

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSpec":
        _reject_unknown(data, {"latency_range", "drop_rate"}, "network")
        latency = data.get("latency_range", (0.005, 0.050))
        return cls(latency_range=(float(latency[0]), float(latency[1])),
                   drop_rate=data.get("drop_rate", 0.0))


@dataclass(frozen=True)
class ExperimentSpec:
    """One condition at one budget, run over several trial seeds."""

    name: str
    condition: str
    rounds: int
    iters_per_round: int
    nodes: tuple[NodeSpec, ...]
    trial_seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    p_new: float = 0.1
    champion_window: int | None = 5
    mars: MarsConfig = field(default_factory=MarsConfig)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    seeds_dir: str | None = None
    corpus_dir: str | None = None
    topic: str = "champions"
    declared_budget: int | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SpecError("experiment name must be non-empty")
        if self.condition not in CONDITIONS:
            raise SpecError(f"condition must be one of {CONDITIONS}")
        if self.rounds < 1 or self.iters_per_round < 1:
            raise SpecError("rounds and iters_per_round must be positive")
        if not self.nodes:
            raise SpecError("at least one node is required")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise SpecError("node ids must be unique")
        if not self.trial_seeds:
            raise SpecError("at least one trial seed is required")
        if len(set(self.trial_seeds)) != len(self.trial_seeds):
            raise SpecError("trial seeds must be unique")
        if not 0 <= self.p_new <= 1:
            raise SpecError("p_new must be in [0, 1]")
        identities = {n.operator.identity for n in self.nodes}
        if self.condition == "solo" and len(self.nodes) != 1:
            raise SpecError("solo condition runs exactly one node")
        if self.condition != "solo" and len(self.nodes) < 2:
            raise SpecError(f"{self.condition} condition needs at least 2 nodes")
        if self.condition == "homogeneous" and len(identities) != 1:
            raise SpecError("homogeneous condition requires identical operators")
        if self.condition == "diverse" and len(identities) < 2:
            raise SpecError("diverse condition requires >= 2 distinct operators")
        if self.declared_budget is not None:
            # conditions are budget-matched up to rounding of T = budget / N,
            # which costs at most 2 calls per round at the defaults
            drift = abs(self.total_budget - self.declared_budget)
            if drift > 2 * self.rounds:
                raise SpecError(
                    f"configured budget {self.total_budget} is more than "
                    f"2/round away from declared {self.declared_budget}")

    @property
    def total_budget(self) -> int:
        return self.rounds * self.iters_per_round * len(self.nodes)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "condition": self.condition,
            "rounds": self.rounds,
            "iters_per_round": self.iters_per_round,
            "nodes": [n.to_dict() for n in self.nodes],
            "trial_seeds": list(self.trial_seeds),
            "p_new": self.p_new,
            "champion_window": self.champion_window,
            "mars": self.mars.to_dict(),
            "network": self.network.to_dict(),
            "seeds_dir": self.seeds_dir,
            "corpus_dir": self.corpus_dir,
            "topic": self.topic,
        }
        if self.declared_budget is not None:
            out["declared_budget"] = self.declared_budget
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        allowed = {"name", "condition", "rounds", "iters_per_round", "nodes",
                   "trial_seeds", "p_new", "champion_window", "mars", "network",
                   "seeds_dir", "corpus_dir", "topic", "declared_budget"}
        _reject_unknown(data, allowed, "experiment")
        if "nodes" not in data:
            raise SpecError("experiment requires a node list")
        return cls(
            name=data.get("name", ""),
            condition=data.get("condition", ""),
            rounds=data.get("rounds", 0),
            iters_per_round=data.get("iters_per_round", 0),
            nodes=tuple(NodeSpec.from_dict(n) for n in data["nodes"]),
            trial_seeds=tuple(data.get("trial_seeds", (1, 2, 3, 4, 5))),
            p_new=data.get("p_new", 0.1),
            champion_window=data.get("champion_window", 5),
            mars=MarsConfig.from_dict(data["mars"]) if "mars" in data
            else MarsConfig(),
            network=NetworkSpec.from_dict(data["network"]) if "network" in data
            else NetworkSpec(),
            seeds_dir=data.get("seeds_dir"),
            corpus_dir=data.get("corpus_dir"),
            topic=data.get("topic", "champions"),
            declared_budget=data.get("declared_budget"),
        )


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise SpecError(f"{path}: expected a JSON object")
    return ExperimentSpec.from_dict(data)


def save_spec(spec: ExperimentSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True)
                          + "\n")
