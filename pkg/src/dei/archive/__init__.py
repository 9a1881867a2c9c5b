from .grid import BcGrid
from .io import elite_from_dict, elite_to_dict, load_archive, save_archive
from .store import (
    Archive,
    Elite,
    EmptyArchive,
    GridMismatch,
    map_elites_update,
    merge,
    niche_novelty,
    seed,
)

__all__ = [
    "Archive",
    "BcGrid",
    "Elite",
    "EmptyArchive",
    "GridMismatch",
    "elite_from_dict",
    "elite_to_dict",
    "load_archive",
    "map_elites_update",
    "merge",
    "niche_novelty",
    "save_archive",
    "seed",
]
