"""HTTP/JSON API in front of the engine, mounted under ``/v1``.

Errors are returned as ``{"error": {"code": ..., "message": ...}}`` with a
code from :data:`ERROR_CODES`.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import AppConfig
from .errors import EmptyGroup, NoImpressions, ValidationFailed
from .events import IMPRESSION, EventLog, InteractionEvent
from .experiment import ExperimentConfig, assign_group, report
from .mastery import mastery_report
from .outcomes import LearningModel, audit_coverage
from .recommenders import RecommendationEngine, RecommendationRequest

ERROR_CODES = {
    "invalid_request": 400,
    "not_found": 404,
    "empty_group": 409,
    "validation_failed": 422,
    "model_not_loaded": 503,
}


@dataclass
class ApiError(Exception):
    code: str
    message: str

    @property
    def status(self) -> int:
        return ERROR_CODES[self.code]

    def response(self) -> JSONResponse:
        return JSONResponse({"error": {"code": self.code, "message": self.message}}, status_code=self.status)


class ServiceState:
    """Everything a request handler needs; ``model=None`` means not loaded yet."""

    def __init__(
        self,
        model: LearningModel | None,
        engine: RecommendationEngine | None,
        log: EventLog,
        experiments: dict[str, ExperimentConfig],
        *,
        strict: bool = False,
        clock=None,
    ):
        self.model = model
        self.engine = engine
        self.log = log
        self.experiments = experiments
        self.strict = strict
        self.clock = clock or (lambda: int(time.time() * 1000))

    @classmethod
    def from_config(cls, cfg: AppConfig, log: EventLog, **kw) -> "ServiceState":
        engine = RecommendationEngine(cfg.model, cfg.recommenders)
        return cls(cfg.model, engine, log, dict(cfg.experiments), strict=cfg.strict, **kw)

    def require_model(self) -> LearningModel:
        if self.model is None or self.engine is None:
            raise ApiError("model_not_loaded", "learning model is not loaded")
        return self.model

    @property
    def serving_experiment(self) -> ExperimentConfig:
        if not self.experiments:
            raise ApiError("model_not_loaded", "no experiment configured")
        return next(iter(self.experiments.values()))


def _parse_n(raw: str | None, default: int) -> int:
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ApiError("invalid_request", f"n must be an integer, got {raw!r}") from None
    if n < 1:
        raise ApiError("invalid_request", "n must be at least 1")
    return n


def create_app(state: ServiceState, *, default_n: int = 3) -> FastAPI:
    app = FastAPI(title="ober", version="1")
    app.state.ober = state

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        return exc.response()

    @app.get("/v1/learners/{learner_id}/recommendations")
    def recommendations(learner_id: str, n: str | None = None):
        count = _parse_n(n, default_n)
        state.require_model()
        exp = state.serving_experiment
        group = assign_group(learner_id, exp)
        method = exp.method_for(group)
        log = state.log
        with log.transaction():
            now = max(state.clock(), log.last_timestamp(learner_id) or 0)
            snapshot = log.snapshot()
            recs = state.engine.recommend(RecommendationRequest(learner_id, count, snapshot, method, now_ms=now))
            shown = recs.item_ids or (None,)
            log.append_locked([InteractionEvent(learner_id, iid, IMPRESSION, method, now) for iid in shown])
        body = recs.to_dict()
        body.update(learner_id=learner_id, group=group)
        return body

    @app.post("/v1/interactions", status_code=201)
    async def interactions(request: Request):
        model = state.require_model()
        try:
            payload = json.loads(await request.body())
        except ValueError:
            raise ApiError("validation_failed", "body is not valid JSON") from None
        if not isinstance(payload, dict):
            raise ApiError("validation_failed", "body must be a JSON object")
        try:
            event = InteractionEvent.from_dict(payload)
            if state.strict and event.item_id is not None and event.item_id not in model.catalog:
                raise ValidationFailed(f"unknown item {event.item_id!r}")
            offset = state.log.append(event)
        except ValidationFailed as exc:
            raise ApiError("validation_failed", str(exc)) from None
        return {"offset": offset}

    @app.get("/v1/learners/{learner_id}/mastery")
    def mastery(learner_id: str):
        model = state.require_model()
        events = state.log.snapshot().events_for(learner_id)
        return mastery_report(learner_id, events, model).to_dict()

    @app.get("/v1/experiments/{experiment_id}/report")
    def experiment_report(experiment_id: str):
        model = state.require_model()
        exp = state.experiments.get(experiment_id)
        if exp is None:
            raise ApiError("not_found", f"unknown experiment {experiment_id!r}")
        try:
            return report(exp, state.log.snapshot(), model).to_dict()
        except (EmptyGroup, NoImpressions) as exc:
            raise ApiError("empty_group", str(exc)) from None

    @app.get("/v1/coverage")
    def coverage():
        model = state.require_model()
        return audit_coverage(model.forest, model.alignments).to_dict()

    return app
