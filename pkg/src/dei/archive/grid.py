"""Discretization of the behavior space into archive cells."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..mars.fitness import BehavioralCharacteristic


@dataclass(frozen=True)
class BcGrid:
    """Bins for the two behavior axes.

    The time-space product spans many orders of magnitude (one instruction
    dying instantly up to a full-length warrior surviving every cycle), so
    its axis is log-spaced; memory coverage is a fraction, binned linearly
    over [0, 1].  Out-of-range TSP values clamp to the first or last bin.
    """

    tsp_edges: tuple[float, ...]
    mc_bins: int = 10

    def __post_init__(self) -> None:
        if len(self.tsp_edges) < 2:
            raise ValueError("tsp_edges needs at least two boundaries")
        if any(a >= b for a, b in zip(self.tsp_edges, self.tsp_edges[1:])):
            raise ValueError("tsp_edges must be strictly ascending")
        if self.mc_bins < 1:
            raise ValueError("mc_bins must be positive")

    @classmethod
    def build(cls, tsp_max: float, tsp_bins: int = 10,
              mc_bins: int = 10) -> "BcGrid":
        """Log-spaced TSP boundaries from 1 to ``tsp_max``."""
        if tsp_max <= 1:
            raise ValueError("tsp_max must exceed 1")
        if tsp_bins < 1:
            raise ValueError("tsp_bins must be positive")
        top = math.log10(tsp_max)
        edges = tuple(10.0 ** (top * i / tsp_bins) for i in range(tsp_bins + 1))
        return cls(tsp_edges=edges, mc_bins=mc_bins)

    @classmethod
    def for_battle_limits(cls, max_warrior_length: int, max_cycles: int,
                          tsp_bins: int = 10, mc_bins: int = 10) -> "BcGrid":
        return cls.build(float(max_warrior_length) * float(max_cycles),
                         tsp_bins=tsp_bins, mc_bins=mc_bins)

    @property
    def tsp_bins(self) -> int:
        return len(self.tsp_edges) - 1

    @property
    def total_cells(self) -> int:
        return self.tsp_bins * self.mc_bins

    def bin(self, bc: BehavioralCharacteristic) -> tuple[int, int]:
        tsp_bin = 0
        for edge in self.tsp_edges[1:-1]:
            if bc.tsp >= edge:
                tsp_bin += 1
            else:
                break
        mc_bin = min(int(bc.mc * self.mc_bins), self.mc_bins - 1)
        return tsp_bin, mc_bin

    def to_dict(self) -> dict:
        return {"tsp_edges": list(self.tsp_edges), "mc_bins": self.mc_bins}

    @classmethod
    def from_dict(cls, data: dict) -> "BcGrid":
        return cls(tsp_edges=tuple(data["tsp_edges"]), mc_bins=data["mc_bins"])
