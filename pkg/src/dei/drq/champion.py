"""Round champion record and its canonical wire form.

The payload published to peers is canonical JSON (sorted keys, compact
separators) with the same warrior shape the archive files use, so one
serialization covers both the wire and disk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..mars import BehavioralCharacteristic
from ..redcode import DEFAULT_CORE_SIZE, Warrior, parse, serialize


class ChampionDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class Champion:
    warrior: Warrior
    fitness: float
    bc: BehavioralCharacteristic
    round_index: int
    node_id: str

    @property
    def content_hash(self) -> str:
        return self.warrior.content_hash()

    def to_dict(self) -> dict:
        return {
            "bc": {"tsp": self.bc.tsp, "mc": self.bc.mc},
            "content_hash": self.content_hash,
            "fitness": self.fitness,
            "node_id": self.node_id,
            "round": self.round_index,
            "warrior": {"origin": self.warrior.origin, "source": serialize(self.warrior)},
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def champion_from_dict(data: dict, core_size: int = DEFAULT_CORE_SIZE) -> Champion:
    try:
        warrior = parse(data["warrior"]["source"], core_size=core_size,
                        origin=data["warrior"].get("origin"))
        champion = Champion(
            warrior=warrior,
            fitness=float(data["fitness"]),
            bc=BehavioralCharacteristic(tsp=float(data["bc"]["tsp"]),
                                        mc=float(data["bc"]["mc"])),
            round_index=int(data["round"]),
            node_id=str(data["node_id"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ChampionDecodeError(f"bad champion payload: {err}") from err
    carried = data.get("content_hash")
    if carried is not None and carried != champion.content_hash:
        raise ChampionDecodeError("champion content hash does not match program")
    return champion


def champion_from_bytes(payload: bytes, core_size: int = DEFAULT_CORE_SIZE) -> Champion:
    try:
        data = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ChampionDecodeError(f"champion payload is not JSON: {err}") from err
    return champion_from_dict(data, core_size)
