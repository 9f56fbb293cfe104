"""REST interface for the ranking survey.

POST /questionnaires issues a blinded questionnaire from a seed and a
system pool; GET /questionnaires/{id} re-serves it; POST /responses
validates and journals a submission and answers with the acceptance
verdict; GET /export turns accepted responses into pairwise outcomes.
GET /instructions serves the static respondent instruction text.
"""

from __future__ import annotations

import uuid
from datetime import datetime, timezone
from importlib import resources

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from ..errors import (
    IncompleteResponse,
    PoolTooSmall,
    TestSetTooSmall,
    UnknownCandidate,
)
from .core import (
    DEFAULT_MIN_DURATION_S,
    DEFAULT_ORDERING_THRESHOLD,
    SurveyItem,
    SurveyResponse,
    build_questionnaire,
    export_outcomes,
    validate_response,
)
from .journal import JournalStore

__all__ = ["create_app", "default_instructions"]


def default_instructions() -> str:
    return resources.files("csmt").joinpath(
        "templates/survey_instructions.txt"
    ).read_text(encoding="utf-8")


class RankingIn(BaseModel):
    question_id: str
    order: list[str] = Field(min_length=1)


class ResponseIn(BaseModel):
    questionnaire_id: str
    respondent_id: str
    rankings: list[RankingIn]
    total_duration_s: float = Field(ge=0)


class BuildIn(BaseModel):
    seed: int
    pool: list[str] = Field(min_length=2)
    n_questions: int = 10
    n_candidates: int = 5
    always_include: str | None = None


class OverrideIn(BaseModel):
    accepted: bool


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def create_app(
    store: JournalStore,
    items: list[SurveyItem],
    instructions: str | None = None,
    min_duration_s: float = DEFAULT_MIN_DURATION_S,
    ordering_threshold: float = DEFAULT_ORDERING_THRESHOLD,
) -> FastAPI:
    app = FastAPI(title="csmt survey service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    instructions_text = instructions if instructions is not None else default_instructions()

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/instructions", response_class=PlainTextResponse)
    def get_instructions():
        return instructions_text

    @app.post("/questionnaires")
    def post_questionnaire(body: BuildIn):
        try:
            qn = build_questionnaire(
                items,
                body.pool,
                body.seed,
                n_questions=body.n_questions,
                n_candidates=body.n_candidates,
                always_include=body.always_include,
                created_at=_now(),
            )
        except (PoolTooSmall, TestSetTooSmall, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        known = store.questionnaires()
        if qn.questionnaire_id not in known:
            store.append_questionnaire(qn)
        return qn.blinded_dict()

    @app.get("/questionnaires/{questionnaire_id}")
    def get_questionnaire(questionnaire_id: str):
        qn = store.questionnaires().get(questionnaire_id)
        if qn is None:
            raise HTTPException(status_code=404, detail="unknown questionnaire")
        return qn.blinded_dict()

    @app.post("/responses")
    def post_response(body: ResponseIn):
        qn = store.questionnaires().get(body.questionnaire_id)
        if qn is None:
            raise HTTPException(status_code=404, detail="unknown questionnaire")
        rankings = {r.question_id: tuple(r.order) for r in body.rankings}
        if len(rankings) != len(body.rankings):
            raise HTTPException(status_code=422, detail="duplicate question in rankings")
        try:
            validity = validate_response(
                qn,
                rankings,
                body.total_duration_s,
                min_duration_s=min_duration_s,
                ordering_threshold=ordering_threshold,
            )
        except (IncompleteResponse, UnknownCandidate) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        response = SurveyResponse(
            response_id=f"r-{uuid.uuid4().hex[:12]}",
            questionnaire_id=body.questionnaire_id,
            respondent_id=body.respondent_id,
            rankings=rankings,
            total_duration_s=body.total_duration_s,
            submitted_at=_now(),
            validity=validity,
        )
        store.append_response(response)
        return {
            "response_id": response.response_id,
            "accepted": validity.effective_accepted,
            "validity": validity.to_dict(),
        }

    @app.post("/responses/{response_id}/override")
    def post_override(response_id: str, body: OverrideIn):
        known = {r.response_id for r in store.responses()}
        if response_id not in known:
            raise HTTPException(status_code=404, detail="unknown response")
        store.append_override(response_id, body.accepted)
        return {"response_id": response_id, "override": body.accepted}

    @app.get("/export")
    def get_export(accepted: bool = Query(default=True)):
        result = export_outcomes(
            store.questionnaires(), store.responses(), accepted_only=accepted
        )
        return {
            "responses_used": result.responses_used,
            "outcomes": [
                {"winner": o.winner, "loser": o.loser} for o in result.outcomes
            ],
            "placements": [
                {
                    "evaluator_id": sheet.evaluator_id,
                    "scores": {s: list(v) for s, v in sheet.scores.items()},
                }
                for sheet in result.placements
            ],
        }

    return app
