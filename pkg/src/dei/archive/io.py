"""Archive persistence: JSON-lines, one elite per line.

The first line is a header carrying the grid so independently produced
archive files can be checked for compatibility before merging.  Lines are
emitted in cell order and keys are sorted, making saves byte-reproducible.
"""

from __future__ import annotations

import json
import os

from ..mars.fitness import BehavioralCharacteristic
from ..redcode.insn import Warrior
from ..redcode.parser import parse, serialize
from .grid import BcGrid
from .store import Archive, Elite

FORMAT_VERSION = 1


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def elite_to_dict(elite: Elite) -> dict:
    return {
        "cell": list(elite.cell),
        "fitness": elite.fitness,
        "bc": {"tsp": elite.bc.tsp, "mc": elite.bc.mc},
        "round": elite.round,
        "origin": elite.origin,
        "warrior": {
            "source": serialize(elite.warrior),
            "origin": elite.warrior.origin,
        },
    }


def elite_from_dict(data: dict, core_size: int = 8000) -> Elite:
    warrior = parse(data["warrior"]["source"], core_size=core_size,
                    origin=data["warrior"].get("origin"))
    return Elite(
        warrior=warrior,
        fitness=data["fitness"],
        bc=BehavioralCharacteristic(tsp=data["bc"]["tsp"], mc=data["bc"]["mc"]),
        cell=tuple(data["cell"]),
        round=data["round"],
        origin=data.get("origin"),
    )


def save_archive(archive: Archive, path: str) -> None:
    header = {
        "kind": "archive",
        "version": FORMAT_VERSION,
        "grid": archive.grid.to_dict(),
    }
    lines = [_canonical(header)]
    lines.extend(_canonical(elite_to_dict(e)) for e in archive.elites())
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_archive(path: str, core_size: int = 8000) -> Archive:
    with open(path, encoding="utf-8") as fh:
        raw = [line for line in fh.read().splitlines() if line.strip()]
    if not raw:
        raise ValueError(f"{path}: empty archive file")
    header = json.loads(raw[0])
    if header.get("kind") != "archive":
        raise ValueError(f"{path}: not an archive file")
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {header.get('version')}")
    grid = BcGrid.from_dict(header["grid"])
    archive = Archive(grid)
    for line in raw[1:]:
        elite = elite_from_dict(json.loads(line), core_size=core_size)
        archive.cells[elite.cell] = elite
    return archive
