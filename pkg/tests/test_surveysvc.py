"""Survey construction, validation, journaling, and the REST API."""

from __future__ import annotations

import json
import random

import pytest
from fastapi.testclient import TestClient

from csmt import errors
from csmt.errors import (
    IncompleteResponse,
    ParseError,
    PoolTooSmall,
    UnknownCandidate,
)
from csmt.surveysvc import (
    JournalStore,
    Questionnaire,
    SurveyItem,
    SurveyResponse,
    Validity,
    build_questionnaire,
    export_outcomes,
    load_survey_items,
    validate_response,
)
from csmt.surveysvc.api import create_app

SYSTEMS = ["sysA", "sysB", "sysC", "sysD", "sysE", "sysF"]


def make_items(n=12, systems=SYSTEMS):
    # translation text must not mention the system, or blinding checks
    # would trip on legitimate content
    return [
        SurveyItem(
            f"item{i:02d}",
            f"source sentence {i}",
            {s: f"translation {i} variant {j}" for j, s in enumerate(systems)},
        )
        for i in range(n)
    ]


def ranking_in_display_order(qn: Questionnaire) -> dict[str, list[str]]:
    return {q.question_id: list(q.candidate_ids()) for q in qn.questions}


def ranking_shuffled(qn: Questionnaire, seed: int) -> dict[str, list[str]]:
    rng = random.Random(seed)
    out = {}
    for q in qn.questions:
        ids = list(q.candidate_ids())
        while True:
            rng.shuffle(ids)
            if ids != list(q.candidate_ids()):
                break
        out[q.question_id] = list(ids)
    return out


# --- construction ---------------------------------------------------------


def test_build_is_deterministic():
    items = make_items()
    a = build_questionnaire(items, SYSTEMS[:5], seed=7)
    b = build_questionnaire(items, SYSTEMS[:5], seed=7)
    assert a.to_dict() == b.to_dict()
    c = build_questionnaire(items, SYSTEMS[:5], seed=8)
    assert c.questionnaire_id != a.questionnaire_id


def test_build_shapes_and_blinding():
    qn = build_questionnaire(make_items(), SYSTEMS, seed=1, n_questions=4, n_candidates=3)
    assert len(qn.questions) == 4
    for q in qn.questions:
        assert len(q.candidates) == 3
        systems = [c.system_id for c in q.candidates]
        assert len(set(systems)) == 3
    blinded = json.dumps(qn.blinded_dict())
    for system in SYSTEMS:
        assert system not in blinded


def test_build_always_include():
    qn = build_questionnaire(
        make_items(), SYSTEMS, seed=3, n_questions=6, n_candidates=4,
        always_include="sysF",
    )
    for q in qn.questions:
        assert "sysF" in [c.system_id for c in q.candidates]


def test_build_pool_too_small():
    with pytest.raises(PoolTooSmall):
        build_questionnaire(make_items(), SYSTEMS[:4], seed=1, n_candidates=5)


def test_build_testset_too_small():
    with pytest.raises(errors.TestSetTooSmall):
        build_questionnaire(make_items(5), SYSTEMS[:5], seed=1, n_questions=10)


def test_build_skips_items_missing_pool_systems():
    items = make_items(12)
    partial = [
        SurveyItem(f"partial{i}", "src", {"sysA": "t"}) for i in range(20)
    ]
    qn = build_questionnaire(items + partial, SYSTEMS[:5], seed=2, n_questions=10)
    used = {q.item_id for q in qn.questions}
    assert all(item.startswith("item") for item in used)


def test_build_validates_arguments():
    with pytest.raises(ValueError):
        build_questionnaire(make_items(), SYSTEMS, seed=1, n_candidates=1)
    with pytest.raises(ValueError):
        build_questionnaire(make_items(), SYSTEMS[:5], seed=1, always_include="ghost")


def test_questionnaire_roundtrip():
    qn = build_questionnaire(make_items(), SYSTEMS[:5], seed=9)
    again = Questionnaire.from_dict(qn.to_dict())
    assert again == qn


# --- validation ------------------------------------------------------------


@pytest.fixture(scope="module")
def qn10() -> Questionnaire:
    return build_questionnaire(make_items(), SYSTEMS[:5], seed=42)


def test_validity_rejected_only_when_both_flags(qn10):
    lazy = ranking_in_display_order(qn10)
    honest = ranking_shuffled(qn10, 5)

    fast_lazy = validate_response(qn10, lazy, total_duration_s=100.0)
    assert fast_lazy.time_flag and fast_lazy.ordering_flag
    assert not fast_lazy.accepted

    fast_honest = validate_response(qn10, honest, total_duration_s=100.0)
    assert fast_honest.time_flag and not fast_honest.ordering_flag
    assert fast_honest.accepted

    slow_lazy = validate_response(qn10, lazy, total_duration_s=900.0)
    assert not slow_lazy.time_flag and slow_lazy.ordering_flag
    assert slow_lazy.accepted

    slow_honest = validate_response(qn10, honest, total_duration_s=900.0)
    assert not slow_honest.time_flag and not slow_honest.ordering_flag
    assert slow_honest.accepted


def test_validity_time_boundary(qn10):
    honest = ranking_shuffled(qn10, 6)
    at_limit = validate_response(qn10, honest, total_duration_s=300.0)
    assert at_limit.time_flag is False
    under = validate_response(qn10, honest, total_duration_s=299.9)
    assert under.time_flag is True


def test_validate_rejects_incomplete(qn10):
    rankings = ranking_in_display_order(qn10)
    missing = dict(rankings)
    missing.pop("q01")
    with pytest.raises(IncompleteResponse):
        validate_response(qn10, missing, 900.0)

    partial = dict(rankings)
    partial["q01"] = partial["q01"][:-1]
    with pytest.raises(IncompleteResponse):
        validate_response(qn10, partial, 900.0)

    repeated = dict(rankings)
    repeated["q01"] = [repeated["q01"][0]] * len(repeated["q01"])
    with pytest.raises(IncompleteResponse):
        validate_response(qn10, repeated, 900.0)


def test_validate_rejects_unknown_candidate(qn10):
    rankings = ranking_in_display_order(qn10)
    rankings["q01"] = ["q99c9"] + rankings["q01"][1:]
    with pytest.raises(UnknownCandidate):
        validate_response(qn10, rankings, 900.0)


def test_override_wins():
    v = Validity(time_flag=True, ordering_flag=True, accepted=False, override=True)
    assert v.effective_accepted is True
    v2 = Validity(False, False, True, override=False)
    assert v2.effective_accepted is False
    v3 = Validity(False, False, True)
    assert v3.effective_accepted is True


# --- export ---------------------------------------------------------------


def make_response(rid, qn, rankings, accepted=True, override=None):
    return SurveyResponse(
        response_id=rid,
        questionnaire_id=qn.questionnaire_id,
        respondent_id=f"resp-{rid}",
        rankings=rankings,
        total_duration_s=900.0,
        validity=Validity(False, False, accepted, override),
    )


def test_export_count_law(qn10):
    responses = [
        make_response("r1", qn10, ranking_shuffled(qn10, 1)),
        make_response("r2", qn10, ranking_shuffled(qn10, 2)),
        make_response("r3", qn10, ranking_shuffled(qn10, 3), accepted=False),
    ]
    got = export_outcomes({qn10.questionnaire_id: qn10}, responses)
    # 2 accepted responses x 10 questions x C(5,2) pairs
    assert got.responses_used == 2
    assert len(got.outcomes) == 2 * 10 * 10
    assert len(got.placements) == 2
    sheet = got.placements[0]
    assert sheet.evaluator_id == "resp-r1"
    # every ranked system collects one placement per question it appears in
    total_places = sum(len(v) for v in sheet.scores.values())
    assert total_places == 10 * 5


def test_export_honors_override(qn10):
    responses = [
        make_response("r1", qn10, ranking_shuffled(qn10, 1), accepted=False, override=True),
        make_response("r2", qn10, ranking_shuffled(qn10, 2), accepted=True, override=False),
    ]
    got = export_outcomes({qn10.questionnaire_id: qn10}, responses)
    assert got.responses_used == 1
    assert len(got.outcomes) == 100


def test_export_skips_unknown_questionnaire(qn10):
    resp = make_response("r1", qn10, ranking_shuffled(qn10, 1))
    got = export_outcomes({}, [resp])
    assert got.responses_used == 0
    assert got.outcomes == ()


def test_export_can_include_rejected(qn10):
    responses = [make_response("r1", qn10, ranking_shuffled(qn10, 1), accepted=False)]
    got = export_outcomes(
        {qn10.questionnaire_id: qn10}, responses, accepted_only=False
    )
    assert got.responses_used == 1


def test_export_outcome_systems(qn10):
    rankings = ranking_in_display_order(qn10)
    resp = make_response("r1", qn10, rankings)
    got = export_outcomes({qn10.questionnaire_id: qn10}, [resp])
    q1 = qn10.questions[0]
    display_systems = [c.system_id for c in q1.candidates]
    first_pairs = got.outcomes[:10]
    assert first_pairs[0].winner == display_systems[0]
    assert first_pairs[0].loser == display_systems[1]


# --- items file ------------------------------------------------------------


def test_load_survey_items(tmp_path):
    p = tmp_path / "items.jsonl"
    rows = [
        {"id": "i1", "source_en": "src one", "translations": {"a": "x", "b": "y"}},
        {"id": "i2", "source_en": "src two", "translations": {"a": "x2", "b": "y2"}},
    ]
    p.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    items = load_survey_items(p)
    assert [i.item_id for i in items] == ["i1", "i2"]
    assert items[0].translations == {"a": "x", "b": "y"}


def test_load_survey_items_errors(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"id": "i1", "source_en": "s"}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        load_survey_items(p)
    p.write_text(
        '{"id": "i1", "source_en": "s", "translations": {"a": "x"}}\n'
        '{"id": "i1", "source_en": "s", "translations": {"a": "x"}}\n',
        encoding="utf-8",
    )
    with pytest.raises(ParseError) as exc:
        load_survey_items(p)
    assert exc.value.line == 2


# --- journal ---------------------------------------------------------------


def test_journal_roundtrip(tmp_path, qn10):
    store = JournalStore(tmp_path / "j")
    store.append_questionnaire(qn10)
    resp = make_response("r1", qn10, ranking_shuffled(qn10, 1))
    store.append_response(resp)

    fresh = JournalStore(tmp_path / "j")
    assert fresh.questionnaires()[qn10.questionnaire_id] == qn10
    loaded = fresh.responses()
    assert len(loaded) == 1
    assert loaded[0].response_id == "r1"
    assert loaded[0].rankings == resp.rankings


def test_journal_override_folding(tmp_path, qn10):
    store = JournalStore(tmp_path / "j")
    store.append_questionnaire(qn10)
    resp = make_response("r1", qn10, ranking_shuffled(qn10, 1), accepted=False)
    store.append_response(resp)
    store.append_override("r1", True)

    loaded = JournalStore(tmp_path / "j").responses()
    assert loaded[0].validity.override is True
    assert loaded[0].validity.effective_accepted is True
    # the automatic verdict is preserved
    assert loaded[0].validity.accepted is False


def test_journal_questionnaire_first_wins(tmp_path, qn10):
    store = JournalStore(tmp_path / "j")
    store.append_questionnaire(qn10)
    store.append_questionnaire(qn10)
    assert len(store.questionnaires()) == 1


# --- REST API ---------------------------------------------------------------


@pytest.fixture()
def client(tmp_path):
    app = create_app(
        JournalStore(tmp_path / "journal"),
        make_items(),
        min_duration_s=300.0,
    )
    return TestClient(app)


def build_via_api(client, seed=5, **kw):
    body = {"seed": seed, "pool": SYSTEMS[:5], **kw}
    resp = client.post("/questionnaires", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()


def respond_via_api(client, doc, duration, lazy=False, seed=1):
    rankings = []
    for q in doc["questions"]:
        ids = [c["candidate_id"] for c in q["candidates"]]
        if not lazy:
            rng = random.Random(seed + len(rankings))
            while True:
                rng.shuffle(ids)
                if ids != [c["candidate_id"] for c in q["candidates"]]:
                    break
        rankings.append({"question_id": q["question_id"], "order": ids})
    return client.post(
        "/responses",
        json={
            "questionnaire_id": doc["questionnaire_id"],
            "respondent_id": "tester",
            "rankings": rankings,
            "total_duration_s": duration,
        },
    )


def test_api_health_and_instructions(client):
    assert client.get("/health").json() == {"status": "ok"}
    text = client.get("/instructions").text
    assert "proportion of English" in text


def test_api_questionnaire_flow_is_blinded(client):
    doc = build_via_api(client)
    assert len(doc["questions"]) == 10
    body = json.dumps(doc)
    for system in SYSTEMS:
        assert system not in body
    again = client.get(f"/questionnaires/{doc['questionnaire_id']}")
    assert again.status_code == 200
    assert again.json() == doc
    assert client.get("/questionnaires/qn-none").status_code == 404


def test_api_build_validation(client):
    resp = client.post(
        "/questionnaires", json={"seed": 1, "pool": SYSTEMS[:4], "n_candidates": 5}
    )
    assert resp.status_code == 422
    resp = client.post(
        "/questionnaires", json={"seed": 1, "pool": SYSTEMS[:5], "n_questions": 999}
    )
    assert resp.status_code == 422


def test_api_response_verdicts(client):
    doc = build_via_api(client)
    accepted = respond_via_api(client, doc, duration=900.0).json()
    assert accepted["accepted"] is True
    assert accepted["validity"]["time_flag"] is False
    assert accepted["response_id"].startswith("r-")

    rejected = respond_via_api(client, doc, duration=30.0, lazy=True).json()
    assert rejected["accepted"] is False
    assert rejected["validity"]["time_flag"] is True
    assert rejected["validity"]["ordering_flag"] is True


def test_api_response_errors(client):
    doc = build_via_api(client)
    q0 = doc["questions"][0]
    ids = [c["candidate_id"] for c in q0["candidates"]]

    missing = client.post(
        "/responses",
        json={
            "questionnaire_id": doc["questionnaire_id"],
            "respondent_id": "t",
            "rankings": [{"question_id": q0["question_id"], "order": ids}],
            "total_duration_s": 900.0,
        },
    )
    assert missing.status_code == 422

    unknown_qn = client.post(
        "/responses",
        json={
            "questionnaire_id": "qn-ghost",
            "respondent_id": "t",
            "rankings": [{"question_id": "q01", "order": ids}],
            "total_duration_s": 900.0,
        },
    )
    assert unknown_qn.status_code == 404

    dup = client.post(
        "/responses",
        json={
            "questionnaire_id": doc["questionnaire_id"],
            "respondent_id": "t",
            "rankings": [
                {"question_id": q["question_id"], "order": [c["candidate_id"] for c in q["candidates"]]}
                for q in doc["questions"]
            ]
            + [{"question_id": q0["question_id"], "order": ids}],
            "total_duration_s": 900.0,
        },
    )
    assert dup.status_code == 422


def test_api_override_and_export(client):
    doc = build_via_api(client)
    rejected = respond_via_api(client, doc, duration=30.0, lazy=True).json()
    assert rejected["accepted"] is False

    exported = client.get("/export").json()
    assert exported["responses_used"] == 0

    flip = client.post(
        f"/responses/{rejected['response_id']}/override", json={"accepted": True}
    )
    assert flip.status_code == 200
    assert flip.json() == {"response_id": rejected["response_id"], "override": True}

    exported = client.get("/export").json()
    assert exported["responses_used"] == 1
    assert len(exported["outcomes"]) == 10 * 10
    assert {"winner", "loser"} == set(exported["outcomes"][0])
    assert len(exported["placements"]) == 1

    assert client.post("/responses/r-ghost/override", json={"accepted": True}).status_code == 404


def test_api_export_can_include_rejected(client):
    doc = build_via_api(client)
    respond_via_api(client, doc, duration=30.0, lazy=True)
    strict = client.get("/export").json()
    assert strict["responses_used"] == 0
    loose = client.get("/export", params={"accepted": "false"}).json()
    assert loose["responses_used"] == 1
