"""Held-out generality scoring and bundled warrior sets."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..mars import MarsConfig, win_tie
from ..redcode import Warrior, parse


def _load_dir(directory: Path, core_size: int, max_warrior_length: int,
              what: str) -> list[Warrior]:
    paths = sorted(directory.glob("*.red"))
    if not paths:
        raise ValueError(f"no .red files in {what} directory {directory}")
    return [
        parse(p.read_text(), name=p.stem, core_size=core_size,
              max_warrior_length=max_warrior_length)
        for p in paths
    ]


def _bundled(subdir: str) -> Path:
    return Path(resources.files("dei.experiment") / subdir)


def load_corpus(directory: str | Path | None = None,
                config: MarsConfig | None = None) -> list[Warrior]:
    """Held-out opponents for generality scoring, sorted by file name.

    With no directory, loads the bundled set of classic archetypes."""
    config = config or MarsConfig()
    root = Path(directory) if directory is not None else _bundled("corpus")
    return _load_dir(root, config.core_size, config.max_warrior_length,
                     "corpus")


def load_pool_seeds(directory: str | Path | None = None,
                    config: MarsConfig | None = None) -> list[Warrior]:
    """Starter opponents for each node's pool, disjoint from the corpus."""
    config = config or MarsConfig()
    root = Path(directory) if directory is not None else _bundled("seeds")
    return _load_dir(root, config.core_size, config.max_warrior_length,
                     "seed")


def generality(warrior: Warrior, corpus: list[Warrior],
               config: MarsConfig | None = None, seed: int = 0) -> float:
    """Fraction of the held-out corpus this warrior beats or ties.

    Battle seeds depend only on (seed, opponent, round), so scores computed
    with one seed are paired across warriors and conditions."""
    if not corpus:
        raise ValueError("generality is undefined for an empty corpus")
    beaten = sum(1 for h in corpus if win_tie(warrior, h, config, seed))
    return beaten / len(corpus)
