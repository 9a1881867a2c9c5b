"""Per-node quality-diversity co-evolution loop with champion exchange."""

from .champion import Champion, ChampionDecodeError, champion_from_bytes, champion_from_dict
from .config import DEFAULT_TOPIC, NodeConfig
from .node import DrqNode, IterationLog, RoundReport, round_seed, select_champion
from .pool import OpponentPool

__all__ = [
    "Champion",
    "ChampionDecodeError",
    "DEFAULT_TOPIC",
    "DrqNode",
    "IterationLog",
    "NodeConfig",
    "OpponentPool",
    "RoundReport",
    "champion_from_bytes",
    "champion_from_dict",
    "round_seed",
    "select_champion",
]
