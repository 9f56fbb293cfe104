"""Ranking survey service: blinded questionnaires, response
validation, append-only journals, and a REST interface."""

from .core import (
    Candidate,
    ExportResult,
    Question,
    Questionnaire,
    SurveyItem,
    SurveyResponse,
    Validity,
    build_questionnaire,
    export_outcomes,
    load_survey_items,
    validate_response,
)
from .journal import JournalStore

__all__ = [
    "Candidate",
    "ExportResult",
    "Question",
    "Questionnaire",
    "SurveyItem",
    "SurveyResponse",
    "Validity",
    "build_questionnaire",
    "export_outcomes",
    "load_survey_items",
    "validate_response",
    "JournalStore",
    "create_app",
]


def create_app(*args, **kwargs):
    """Deferred import so the core stays usable without FastAPI."""
    from .api import create_app as _create_app

    return _create_app(*args, **kwargs)
