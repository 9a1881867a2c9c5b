from .config import ConfigError, MarsConfig
from .fitness import (
    BehavioralCharacteristic,
    Evaluation,
    OpponentRecord,
    battle_seed,
    evaluate,
    fitness,
    fitness_from_lifespans,
    fitness_from_masks,
    masks_from_lifespans,
    win_tie,
)
from .vm import (
    F_AM,
    F_AV,
    F_BM,
    F_BV,
    F_MO,
    F_OP,
    BattleOutcome,
    PlacementError,
    TraceStep,
    place_warriors,
    run_battle,
)

__all__ = [
    "BattleOutcome",
    "BehavioralCharacteristic",
    "ConfigError",
    "Evaluation",
    "F_AM",
    "F_AV",
    "F_BM",
    "F_BV",
    "F_MO",
    "F_OP",
    "MarsConfig",
    "OpponentRecord",
    "PlacementError",
    "TraceStep",
    "battle_seed",
    "evaluate",
    "fitness",
    "fitness_from_lifespans",
    "fitness_from_masks",
    "masks_from_lifespans",
    "place_warriors",
    "run_battle",
    "win_tie",
]
