"""Questionnaire construction, response validation, and outcome export
for the translation ranking survey.

A questionnaire samples test items and, per question, a subset of
systems from the pool; candidates are shuffled and identified only by
opaque ids, so respondents never see which system produced a text.
Validation flags rushed submissions (total time under the floor) and
near-constant display-position orderings; a submission is rejected
only when both flags fire, and a human override can reverse the
automatic verdict.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..errors import (
    IncompleteResponse,
    ParseError,
    PoolTooSmall,
    TestSetTooSmall,
    UnknownCandidate,
)
from ..rating import FactualScoreSheet, PairwiseOutcome, rankings_to_pairwise

__all__ = [
    "SurveyItem",
    "Candidate",
    "Question",
    "Questionnaire",
    "Validity",
    "SurveyResponse",
    "ExportResult",
    "load_survey_items",
    "build_questionnaire",
    "validate_response",
    "export_outcomes",
]

DEFAULT_MIN_DURATION_S = 300.0
DEFAULT_ORDERING_THRESHOLD = 0.1


@dataclass(frozen=True)
class SurveyItem:
    """One test sentence with the candidate translations per system."""

    item_id: str
    source_en: str
    translations: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "translations", dict(self.translations))


@dataclass(frozen=True, slots=True)
class Candidate:
    candidate_id: str
    system_id: str
    text: str


@dataclass(frozen=True)
class Question:
    question_id: str
    item_id: str
    source_en: str
    candidates: tuple[Candidate, ...]

    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(c.candidate_id for c in self.candidates)

    def system_of(self, candidate_id: str) -> str:
        for c in self.candidates:
            if c.candidate_id == candidate_id:
                return c.system_id
        raise UnknownCandidate(f"candidate {candidate_id!r} not in {self.question_id}")


@dataclass(frozen=True)
class Questionnaire:
    questionnaire_id: str
    seed: int
    created_at: str
    questions: tuple[Question, ...]

    def question(self, question_id: str) -> Question:
        for q in self.questions:
            if q.question_id == question_id:
                return q
        raise KeyError(question_id)

    def blinded_dict(self) -> dict:
        """Respondent-facing form: no system ids anywhere."""
        return {
            "questionnaire_id": self.questionnaire_id,
            "questions": [
                {
                    "question_id": q.question_id,
                    "source_en": q.source_en,
                    "candidates": [
                        {"candidate_id": c.candidate_id, "text": c.text}
                        for c in q.candidates
                    ],
                }
                for q in self.questions
            ],
        }

    def to_dict(self) -> dict:
        return {
            "questionnaire_id": self.questionnaire_id,
            "seed": self.seed,
            "created_at": self.created_at,
            "questions": [
                {
                    "question_id": q.question_id,
                    "item_id": q.item_id,
                    "source_en": q.source_en,
                    "candidates": [
                        {
                            "candidate_id": c.candidate_id,
                            "system_id": c.system_id,
                            "text": c.text,
                        }
                        for c in q.candidates
                    ],
                }
                for q in self.questions
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Questionnaire":
        questions = tuple(
            Question(
                q["question_id"],
                q["item_id"],
                q["source_en"],
                tuple(
                    Candidate(c["candidate_id"], c["system_id"], c["text"])
                    for c in q["candidates"]
                ),
            )
            for q in d["questions"]
        )
        return cls(d["questionnaire_id"], d["seed"], d["created_at"], questions)


@dataclass(frozen=True)
class Validity:
    """Automatic acceptance verdict plus an optional human override."""

    time_flag: bool
    ordering_flag: bool
    accepted: bool
    override: bool | None = None

    @property
    def effective_accepted(self) -> bool:
        return self.accepted if self.override is None else self.override

    def to_dict(self) -> dict:
        return {
            "time_flag": self.time_flag,
            "ordering_flag": self.ordering_flag,
            "accepted": self.accepted,
            "override": self.override,
        }


@dataclass(frozen=True)
class SurveyResponse:
    response_id: str
    questionnaire_id: str
    respondent_id: str
    rankings: Mapping[str, tuple[str, ...]]  # question id -> best-to-worst candidate ids
    total_duration_s: float
    submitted_at: str = ""
    validity: Validity | None = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "rankings",
            {q: tuple(order) for q, order in self.rankings.items()},
        )

    def to_dict(self) -> dict:
        return {
            "response_id": self.response_id,
            "questionnaire_id": self.questionnaire_id,
            "respondent_id": self.respondent_id,
            "rankings": {q: list(order) for q, order in self.rankings.items()},
            "total_duration_s": self.total_duration_s,
            "submitted_at": self.submitted_at,
            "validity": self.validity.to_dict() if self.validity else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurveyResponse":
        v = d.get("validity")
        validity = (
            Validity(v["time_flag"], v["ordering_flag"], v["accepted"], v.get("override"))
            if v
            else None
        )
        return cls(
            d["response_id"],
            d["questionnaire_id"],
            d["respondent_id"],
            {q: tuple(order) for q, order in d["rankings"].items()},
            d["total_duration_s"],
            d.get("submitted_at", ""),
            validity,
        )


def load_survey_items(path: str | Path) -> list[SurveyItem]:
    """Read test items from JSONL: {"id", "source_en", "translations"}."""
    items: list[SurveyItem] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON: {exc.msg}") from exc
            for key in ("id", "source_en", "translations"):
                if key not in d:
                    raise ParseError(lineno, f"missing field {key!r}")
            if not isinstance(d["translations"], dict) or not all(
                isinstance(v, str) for v in d["translations"].values()
            ):
                raise ParseError(lineno, "translations must map system id to text")
            if d["id"] in seen:
                raise ParseError(lineno, f"duplicate item id {d['id']!r}")
            seen.add(d["id"])
            items.append(SurveyItem(d["id"], d["source_en"], d["translations"]))
    return items


def build_questionnaire(
    items: Sequence[SurveyItem],
    pool: Sequence[str],
    seed: int,
    n_questions: int = 10,
    n_candidates: int = 5,
    always_include: str | None = None,
    created_at: str = "",
) -> Questionnaire:
    """Sample a blinded questionnaire deterministically from a seed.

    Only items translated by every pool system are usable, so any
    candidate sample can be filled.  always_include pins one system
    (e.g. the human reference) into every question; the remaining
    slots are sampled without replacement.  Identical inputs and seed
    reproduce the questionnaire exactly.
    raises PoolTooSmall / TestSetTooSmall when sampling cannot be
    satisfied.
    """
    pool = list(dict.fromkeys(pool))
    if n_candidates < 2:
        raise ValueError("n_candidates must be at least 2")
    if len(pool) < n_candidates:
        raise PoolTooSmall(
            f"pool has {len(pool)} systems, questions need {n_candidates}"
        )
    if always_include is not None and always_include not in pool:
        raise ValueError(f"always_include {always_include!r} is not in the pool")
    usable = [it for it in items if all(s in it.translations for s in pool)]
    if len(usable) < n_questions:
        raise TestSetTooSmall(
            f"{len(usable)} usable items for {n_questions} questions"
        )
    rng = random.Random(seed)
    chosen = rng.sample(usable, n_questions)
    questions: list[Question] = []
    for qi, item in enumerate(chosen, 1):
        question_id = f"q{qi:02d}"
        if always_include is None:
            systems = rng.sample(pool, n_candidates)
        else:
            rest = [s for s in pool if s != always_include]
            systems = [always_include] + rng.sample(rest, n_candidates - 1)
        rng.shuffle(systems)
        candidates = tuple(
            Candidate(f"{question_id}c{slot}", system, item.translations[system])
            for slot, system in enumerate(systems, 1)
        )
        questions.append(Question(question_id, item.item_id, item.source_en, candidates))
    digest_src = json.dumps(
        [
            (q.item_id, [(c.system_id, c.text) for c in q.candidates])
            for q in questions
        ],
        ensure_ascii=False,
        sort_keys=True,
    )
    digest = hashlib.sha256(digest_src.encode("utf-8")).hexdigest()[:8]
    return Questionnaire(f"qn-{seed}-{digest}", seed, created_at, tuple(questions))


def _kendall_distance(a: Sequence[int], b: Sequence[int]) -> float:
    """Normalized Kendall tau distance between two orderings of the
    same items: discordant pairs / all pairs."""
    rank_a = {item: i for i, item in enumerate(a)}
    rank_b = {item: i for i, item in enumerate(b)}
    items = list(rank_a)
    discordant = 0
    pairs = 0
    for x, y in combinations(items, 2):
        pairs += 1
        if (rank_a[x] - rank_a[y]) * (rank_b[x] - rank_b[y]) < 0:
            discordant += 1
    return discordant / pairs if pairs else 0.0


def _position_ordering(question: Question, order: Sequence[str]) -> tuple[int, ...]:
    slots = {c.candidate_id: i for i, c in enumerate(question.candidates)}
    return tuple(slots[cid] for cid in order)


def validate_response(
    questionnaire: Questionnaire,
    rankings: Mapping[str, Sequence[str]],
    total_duration_s: float,
    min_duration_s: float = DEFAULT_MIN_DURATION_S,
    ordering_threshold: float = DEFAULT_ORDERING_THRESHOLD,
) -> Validity:
    """Check completeness and compute the acceptance verdict.

    Completeness: one full permutation of each question's candidates.
    time_flag: total duration under min_duration_s.  ordering_flag:
    mean pairwise Kendall distance between the display-position
    orderings across questions under ordering_threshold (the
    respondent barely moved anything relative to display order from
    question to question).  Rejected only when both flags fire.
    raises IncompleteResponse / UnknownCandidate on malformed input.
    """
    expected = {q.question_id for q in questionnaire.questions}
    got = set(rankings)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        detail = []
        if missing:
            detail.append(f"missing questions {missing}")
        if extra:
            detail.append(f"unknown questions {extra}")
        raise IncompleteResponse("; ".join(detail))
    positions: list[tuple[int, ...]] = []
    for q in questionnaire.questions:
        order = tuple(rankings[q.question_id])
        valid_ids = set(q.candidate_ids())
        for cid in order:
            if cid not in valid_ids:
                raise UnknownCandidate(
                    f"candidate {cid!r} not in question {q.question_id}"
                )
        if len(order) != len(valid_ids) or set(order) != valid_ids:
            raise IncompleteResponse(
                f"question {q.question_id} needs a full permutation of its candidates"
            )
        positions.append(_position_ordering(q, order))

    time_flag = total_duration_s < min_duration_s
    if len(positions) < 2:
        ordering_flag = False
    else:
        dists = [
            _kendall_distance(a, b) for a, b in combinations(positions, 2)
        ]
        ordering_flag = (sum(dists) / len(dists)) < ordering_threshold
    accepted = not (time_flag and ordering_flag)
    return Validity(time_flag, ordering_flag, accepted)


@dataclass(frozen=True)
class ExportResult:
    """Pairwise outcomes plus per-respondent placement tallies.

    Placements reuse the factual sheet shape: each respondent becomes
    an evaluator whose per-system scores are the 1-based ranks given
    to that system (lower is better)."""

    outcomes: tuple[PairwiseOutcome, ...]
    placements: tuple[FactualScoreSheet, ...]
    responses_used: int


def export_outcomes(
    questionnaires: Mapping[str, Questionnaire],
    responses: Iterable[SurveyResponse],
    accepted_only: bool = True,
) -> ExportResult:
    """Turn responses into system-level pairwise outcomes.

    With accepted_only, responses whose effective verdict is rejected
    are skipped (a validity-less response counts as rejected).
    """
    outcomes: list[PairwiseOutcome] = []
    placements: list[FactualScoreSheet] = []
    used = 0
    for resp in responses:
        if accepted_only:
            if resp.validity is None or not resp.validity.effective_accepted:
                continue
        qn = questionnaires.get(resp.questionnaire_id)
        if qn is None:
            continue
        used += 1
        ranks: dict[str, list[float]] = {}
        for question_id, order in resp.rankings.items():
            q = qn.question(question_id)
            systems = [q.system_of(cid) for cid in order]
            outcomes.extend(rankings_to_pairwise(systems))
            for place, system in enumerate(systems, 1):
                ranks.setdefault(system, []).append(float(place))
        if ranks:
            placements.append(
                FactualScoreSheet(resp.respondent_id, {s: tuple(v) for s, v in ranks.items()})
            )
    return ExportResult(tuple(outcomes), tuple(placements), used)
