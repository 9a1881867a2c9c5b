"""Request and response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class WarriorIn(BaseModel):
    source: str
    name: str = "unnamed"


class ParseRequest(BaseModel):
    source: str
    name: str = "unnamed"
    core_size: int = Field(default=8000, ge=2, le=2**24)
    max_warrior_length: int = Field(default=100, ge=1)


class ParsedWarrior(BaseModel):
    name: str
    author: str | None = None
    length: int
    start_offset: int
    content_hash: str
    source: str


class BattleRequest(BaseModel):
    warriors: list[WarriorIn] = Field(min_length=1)
    config: dict | None = None
    seed: int = 0
    trace: bool = False
    trace_limit: int = Field(default=1000, ge=1, le=100_000)


class BattleResponse(BaseModel):
    winner: int | None
    cycles: int
    positions: list[int]
    lifespans: list[int]
    survived: list[bool]
    touched_fraction: list[float]
    trace: list[dict] | None = None
    trace_truncated: bool = False


class EvaluateRequest(BaseModel):
    warrior: WarriorIn
    opponents: list[WarriorIn] = Field(min_length=1)
    config: dict | None = None
    seed: int = 0


class OpponentRecordOut(BaseModel):
    opponent: str
    opponent_hash: str
    wins: int
    losses: int
    ties: int
    mean_fitness: float
    win_or_tie: bool


class EvaluateResponse(BaseModel):
    fitness: float
    tsp: float
    mc: float
    wins: int
    losses: int
    ties: int
    battles: int
    mean_lifespan: float
    per_opponent: list[OpponentRecordOut]


class GeneralityRequest(BaseModel):
    warrior: WarriorIn
    corpus: list[WarriorIn] | None = None  # None selects the bundled corpus
    config: dict | None = None
    seed: int = 0


class GeneralityResponse(BaseModel):
    generality: float
    corpus_size: int
    corpus_hashes: list[str]


class HealthResponse(BaseModel):
    status: str
    core_size: int
