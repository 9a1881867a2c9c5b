"""HTTP service exposing the battle engine and scoring primitives.

Thin wrapper: every endpoint parses sources, delegates to the core
package, and maps domain errors to 400 responses.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..experiment import generality as score_generality
from ..experiment import load_corpus
from ..mars import ConfigError, MarsConfig, evaluate, run_battle
from ..redcode import RedcodeSyntaxError, parse, serialize
from .schemas import (
    BattleRequest,
    BattleResponse,
    EvaluateRequest,
    EvaluateResponse,
    GeneralityRequest,
    GeneralityResponse,
    HealthResponse,
    OpponentRecordOut,
    ParsedWarrior,
    ParseRequest,
    WarriorIn,
)


def _config_from(data: dict | None) -> MarsConfig:
    try:
        return MarsConfig.from_dict(data) if data else MarsConfig()
    except (ConfigError, TypeError) as err:
        raise HTTPException(status_code=400, detail=str(err)) from err


def _parse_one(w: WarriorIn, config: MarsConfig):
    try:
        return parse(w.source, name=w.name, core_size=config.core_size,
                     max_warrior_length=config.max_warrior_length)
    except RedcodeSyntaxError as err:
        raise HTTPException(
            status_code=400, detail=f"warrior {w.name!r}: {err}") from err


def create_app() -> FastAPI:
    app = FastAPI(title="core battle service")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", core_size=MarsConfig().core_size)

    @app.post("/parse", response_model=ParsedWarrior)
    def parse_endpoint(request: ParseRequest) -> ParsedWarrior:
        try:
            warrior = parse(request.source, name=request.name,
                            core_size=request.core_size,
                            max_warrior_length=request.max_warrior_length)
        except RedcodeSyntaxError as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return ParsedWarrior(
            name=warrior.name,
            author=warrior.author,
            length=len(warrior),
            start_offset=warrior.start_offset,
            content_hash=warrior.content_hash(),
            source=serialize(warrior),
        )

    @app.post("/battle", response_model=BattleResponse)
    def battle_endpoint(request: BattleRequest) -> BattleResponse:
        config = _config_from(request.config)
        warriors = [_parse_one(w, config) for w in request.warriors]
        try:
            outcome = run_battle(warriors, config, seed=request.seed,
                                 trace=request.trace,
                                 trace_limit=request.trace_limit)
        except ConfigError as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return BattleResponse(
            winner=outcome.winner,
            cycles=outcome.cycles,
            positions=list(outcome.positions),
            lifespans=[int(x) for x in outcome.lifespans],
            survived=[bool(x) for x in outcome.survived],
            touched_fraction=[float(x) for x in outcome.touched_fraction()],
            trace=[s.to_dict() for s in outcome.trace]
            if outcome.trace is not None else None,
            trace_truncated=outcome.trace_truncated,
        )

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate_endpoint(request: EvaluateRequest) -> EvaluateResponse:
        config = _config_from(request.config)
        warrior = _parse_one(request.warrior, config)
        opponents = [_parse_one(w, config) for w in request.opponents]
        result = evaluate(warrior, opponents, config, seed=request.seed)
        return EvaluateResponse(
            fitness=result.fitness,
            tsp=result.tsp,
            mc=result.mc,
            wins=result.wins,
            losses=result.losses,
            ties=result.ties,
            battles=result.battles,
            mean_lifespan=result.mean_lifespan,
            per_opponent=[
                OpponentRecordOut(
                    opponent=r.opponent,
                    opponent_hash=r.opponent_hash,
                    wins=r.wins,
                    losses=r.losses,
                    ties=r.ties,
                    mean_fitness=r.mean_fitness,
                    win_or_tie=r.win_or_tie,
                )
                for r in result.per_opponent
            ],
        )

    @app.post("/generality", response_model=GeneralityResponse)
    def generality_endpoint(request: GeneralityRequest) -> GeneralityResponse:
        config = _config_from(request.config)
        warrior = _parse_one(request.warrior, config)
        if request.corpus is None:
            corpus = load_corpus(config=config)
        else:
            if not request.corpus:
                raise HTTPException(status_code=400,
                                    detail="corpus must not be empty")
            corpus = [_parse_one(w, config) for w in request.corpus]
        score = score_generality(warrior, corpus, config, seed=request.seed)
        return GeneralityResponse(
            generality=score,
            corpus_size=len(corpus),
            corpus_hashes=[w.content_hash() for w in corpus],
        )

    return app
