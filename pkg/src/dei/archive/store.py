"""MAP-Elites archive: one best warrior per behavior cell."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from ..mars.fitness import BehavioralCharacteristic
from ..redcode.insn import Warrior
from .grid import BcGrid


class EmptyArchive(LookupError):
    """Raised when sampling from an archive with no elites."""


class GridMismatch(ValueError):
    """Raised when merging archives built over different grids."""


@dataclass(frozen=True)
class Elite:
    warrior: Warrior
    fitness: float
    bc: BehavioralCharacteristic
    cell: tuple[int, int]
    round: int = 0
    origin: str | None = None

    def __post_init__(self) -> None:
        if self.fitness < 0:
            raise ValueError("fitness must be non-negative")


class Archive:
    """Mutable cell map owned by a single optimization loop."""

    def __init__(self, grid: BcGrid,
                 cells: dict[tuple[int, int], Elite] | None = None):
        self.grid = grid
        self.cells: dict[tuple[int, int], Elite] = dict(cells or {})

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell: tuple[int, int]) -> bool:
        return cell in self.cells

    def update(self, warrior: Warrior, fitness: float,
               bc: BehavioralCharacteristic, round_index: int = 0,
               origin: str | None = None) -> bool:
        """Insert the candidate if its cell is empty or it strictly beats
        the incumbent; ties keep the incumbent.  Returns acceptance."""
        if fitness < 0:
            raise ValueError("fitness must be non-negative")
        cell = self.grid.bin(bc)
        incumbent = self.cells.get(cell)
        if incumbent is not None and fitness <= incumbent.fitness:
            return False
        self.cells[cell] = Elite(
            warrior=warrior, fitness=fitness, bc=bc, cell=cell,
            round=round_index, origin=origin)
        return True

    def sample_uniform(self, seed: int) -> Elite:
        """Uniform draw over occupied cells, deterministic in the seed."""
        if not self.cells:
            raise EmptyArchive("archive holds no elites")
        occupied = sorted(self.cells)
        cell = random.Random(seed).choice(occupied)
        return self.cells[cell]

    def coverage(self) -> float:
        return len(self.cells) / self.grid.total_cells

    def qd_score(self) -> float:
        return sum(e.fitness for e in self.cells.values())

    def best(self) -> Elite | None:
        """Highest-fitness elite; cell order breaks exact ties."""
        if not self.cells:
            return None
        return max(self.elites(), key=lambda e: e.fitness)

    def elites(self) -> list[Elite]:
        return [self.cells[c] for c in sorted(self.cells)]

    def occupied_cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.cells)

    def seed_champions(self, received, round_index: int = 0) -> int:
        """Insert (warrior, fitness, bc) triples only into empty cells;
        incumbents are never displaced.  Returns how many were inserted."""
        inserted = 0
        for warrior, fitness, bc in received:
            cell = self.grid.bin(bc)
            if cell in self.cells:
                continue
            self.cells[cell] = Elite(
                warrior=warrior, fitness=fitness, bc=bc, cell=cell,
                round=round_index, origin=warrior.origin)
            inserted += 1
        return inserted

    def copy(self) -> "Archive":
        return Archive(self.grid, self.cells)


def map_elites_update(archive: Archive, warrior: Warrior, fitness: float,
                      bc: BehavioralCharacteristic, round_index: int = 0,
                      origin: str | None = None) -> tuple[Archive, bool]:
    accepted = archive.update(warrior, fitness, bc, round_index, origin)
    return archive, accepted


def niche_novelty(received: list[Elite], previous: Archive) -> float | None:
    """Fraction of received champions landing in cells that were empty in
    the previous-round snapshot; None when nothing was received."""
    if not received:
        return None
    prior = previous.occupied_cells()
    fresh = sum(1 for e in received if previous.grid.bin(e.bc) not in prior)
    return fresh / len(received)


def merge(archives: list[Archive]) -> Archive:
    """Cell-wise best across archives.

    Fitnesses must already be comparable (re-scored against one shared pool
    when they came from different nodes); list order breaks exact ties.
    """
    if not archives:
        raise ValueError("nothing to merge")
    grid = archives[0].grid
    for a in archives[1:]:
        if a.grid != grid:
            raise GridMismatch("archives use different grids")
    merged = Archive(grid)
    for a in archives:
        for cell in sorted(a.cells):
            elite = a.cells[cell]
            incumbent = merged.cells.get(cell)
            if incumbent is None or elite.fitness > incumbent.fitness:
                merged.cells[cell] = replace(elite)
    return merged


def seed(archive: Archive, received) -> Archive:
    archive.seed_champions(received)
    return archive
