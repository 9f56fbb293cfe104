"""End-to-end command line tests against the scripted HTTP backend."""

from __future__ import annotations

import csv
import json

import pytest
from click.testing import CliRunner

from csmt import rating
from csmt.cli import main

from conftest import echo_translator, tagging_annotator, write_backend_config

TAGS = {"metformin": "pharm", "diabetes": "patho"}


@pytest.fixture()
def runner():
    return CliRunner()


def write_dataset(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


def read_jsonl(path):
    return [
        json.loads(line)
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def sample_dataset(path):
    return write_dataset(
        path,
        [
            {
                "id": "r1",
                "source_en": "Take metformin daily.",
                "target_cs": "กิน metformin ทุกวัน",
            },
            {
                "id": "r2",
                "source_en": "He has diabetes.",
                "target_cs": "เขาเป็น diabetes",
            },
        ],
    )


def pipeline_scripts(backend):
    backend.scripts["/annotate"] = tagging_annotator(TAGS)
    backend.scripts["/translate"] = echo_translator


# --- mask / translate / unmask ----------------------------------------------


def test_mask_translate_unmask_pipeline(
    runner, tmp_path, fake_backend, monkeypatch
):
    pipeline_scripts(fake_backend)
    cfg = write_backend_config(tmp_path, fake_backend, monkeypatch)
    src = sample_dataset(tmp_path / "in.jsonl")

    masked_path = tmp_path / "masked.jsonl"
    res = runner.invoke(
        main, ["mask", "--input", str(src), "--output", str(masked_path),
               "--backend-config", str(cfg)],
    )
    assert res.exit_code == 0, res.output
    assert "masked 2 records (0 annotation failures)" in res.output
    rows = read_jsonl(masked_path)
    assert rows[0]["masked"] == "Take [[K0]] daily."
    assert rows[0]["placeholders"] == {"0": "metformin"}
    assert rows[1]["placeholders"] == {"0": "diabetes"}

    translated_path = tmp_path / "translated.jsonl"
    res = runner.invoke(
        main, ["translate", "--input", str(masked_path), "--output",
               str(translated_path), "--backend-config", str(cfg)],
    )
    assert res.exit_code == 0, res.output
    rows = read_jsonl(translated_path)
    assert rows[0]["translated_masked"] == "TH:Take [[K0]] daily."

    out_path = tmp_path / "restored.jsonl"
    res = runner.invoke(
        main, ["unmask", "--input", str(translated_path), "--output", str(out_path)],
    )
    assert res.exit_code == 0, res.output
    assert "restored 2 records, dropped 0" in res.output
    rows = read_jsonl(out_path)
    assert rows[0]["target_cs"] == "TH:Take metformin daily."
    assert rows[0]["provenance"] == "pseudo"
    assert rows[0]["meta"]["keywords"] == 1
    assert rows[0]["meta"]["recovered_exact"] == 1
    assert rows[0]["meta"]["appended"] == 0


def test_mask_strict_annotation_error(runner, tmp_path, fake_backend, monkeypatch):
    fake_backend.scripts["/annotate"] = lambda payload: {"text": "no envelope"}
    cfg = write_backend_config(tmp_path, fake_backend, monkeypatch)
    src = sample_dataset(tmp_path / "in.jsonl")
    out = tmp_path / "masked.jsonl"

    res = runner.invoke(
        main, ["mask", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg)],
    )
    assert res.exit_code == 0
    assert "2 annotation failures" in res.output
    rows = read_jsonl(out)
    assert rows[0]["placeholders"] == {}
    assert "annotation_error" in rows[0]["meta"]

    res = runner.invoke(
        main, ["mask", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg), "--strict"],
    )
    assert res.exit_code == 1


def test_mask_requires_backend_config(runner, tmp_path):
    src = sample_dataset(tmp_path / "in.jsonl")
    res = runner.invoke(
        main, ["mask", "--input", str(src), "--output", str(tmp_path / "o.jsonl")],
    )
    assert res.exit_code == 1
    assert "--backend-config" in res.output


def test_unmask_on_lost(runner, tmp_path, fake_backend, monkeypatch):
    rows = [
        {
            "id": "r1",
            "source_en": "Take metformin daily.",
            "masked": "Take [[K0]] daily.",
            "placeholders": {"0": "metformin"},
            "translated_masked": "กินยาทุกวัน",
        }
    ]
    src = write_dataset(tmp_path / "translated.jsonl", rows)
    out = tmp_path / "restored.jsonl"

    res = runner.invoke(main, ["unmask", "--input", str(src), "--output", str(out)])
    assert res.exit_code == 0
    assert "restored 0 records, dropped 1" in res.output
    assert read_jsonl(out) == []

    res = runner.invoke(
        main, ["unmask", "--input", str(src), "--output", str(out), "--strict"],
    )
    assert res.exit_code == 1

    res = runner.invoke(
        main, ["unmask", "--input", str(src), "--output", str(out),
               "--on-lost", "append"],
    )
    assert res.exit_code == 0
    row = read_jsonl(out)[0]
    assert row["target_cs"] == "กินยาทุกวัน [missing-keyword: metformin]"
    assert row["meta"]["appended"] == 1


def test_pseudo_one_shot(runner, tmp_path, fake_backend, monkeypatch):
    pipeline_scripts(fake_backend)
    cfg = write_backend_config(tmp_path, fake_backend, monkeypatch)
    src = sample_dataset(tmp_path / "in.jsonl")
    out = tmp_path / "pseudo.jsonl"

    res = runner.invoke(
        main, ["pseudo", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg)],
    )
    assert res.exit_code == 0, res.output
    assert "produced 2 pseudo records, dropped 0" in res.output
    rows = read_jsonl(out)
    assert rows[0]["id"] == "r1"
    assert rows[0]["target_cs"] == "TH:Take metformin daily."
    assert rows[0]["provenance"] == "pseudo"
    assert rows[0]["meta"]["keywords"] == 1


def test_pseudo_drop_and_strict(runner, tmp_path, fake_backend, monkeypatch):
    fake_backend.scripts["/annotate"] = tagging_annotator(TAGS)
    fake_backend.scripts["/translate"] = lambda payload: {"translation": "หาย"}
    cfg = write_backend_config(tmp_path, fake_backend, monkeypatch)
    src = sample_dataset(tmp_path / "in.jsonl")
    out = tmp_path / "pseudo.jsonl"

    res = runner.invoke(
        main, ["pseudo", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg)],
    )
    assert res.exit_code == 0
    assert "dropped 2" in res.output
    assert read_jsonl(out) == []

    res = runner.invoke(
        main, ["pseudo", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg), "--strict"],
    )
    assert res.exit_code == 1

    res = runner.invoke(
        main, ["pseudo", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg), "--on-lost", "append"],
    )
    assert res.exit_code == 0
    rows = read_jsonl(out)
    assert rows[0]["target_cs"] == "หาย [missing-keyword: metformin]"


# --- chunk -------------------------------------------------------------------


def test_chunk_alignment_and_strict(runner, tmp_path):
    src = write_dataset(
        tmp_path / "in.jsonl",
        [
            {"id": "a", "source_en": "one two", "target_cs": "คำ"},
            {"id": "b", "source_en": "one two three four five six",
             "target_cs": "คำ"},
        ],
    )
    out = tmp_path / "chunks.jsonl"
    res = runner.invoke(
        main, ["chunk", "--input", str(src), "--output", str(out),
               "--max-tokens", "2"],
    )
    assert res.exit_code == 0, res.output
    assert "1 misaligned" in res.output
    rows = read_jsonl(out)
    assert rows[0]["aligned"] is True
    assert rows[1]["aligned"] is False
    assert rows[1]["source_chunks"] == ["one two ", "three four ", "five six"]

    res = runner.invoke(
        main, ["chunk", "--input", str(src), "--max-tokens", "2", "--strict"],
    )
    assert res.exit_code == 1


def test_chunk_single_side(runner, tmp_path):
    src = write_dataset(
        tmp_path / "in.jsonl",
        [{"id": "a", "source_en": "one two three", "target_cs": "คำ"}],
    )
    out = tmp_path / "chunks.jsonl"
    res = runner.invoke(
        main, ["chunk", "--input", str(src), "--output", str(out),
               "--side", "source", "--max-tokens", "2"],
    )
    assert res.exit_code == 0
    rows = read_jsonl(out)
    assert "target_chunks" not in rows[0]
    assert "aligned" not in rows[0]


# --- filter ------------------------------------------------------------------


def test_filter_dice_writes_sidecars(runner, tmp_path):
    src = write_dataset(
        tmp_path / "in.jsonl",
        [
            {"id": "keep", "source_en": "ct scan now", "target_cs": "ct scan now"},
            {"id": "drop", "source_en": "alpha beta gamma", "target_cs": "x y z"},
        ],
    )
    out = tmp_path / "kept.jsonl"
    res = runner.invoke(
        main, ["filter", "--input", str(src), "--output", str(out),
               "--scorer", "dice"],
    )
    assert res.exit_code == 0, res.output
    assert "kept 1 of 2" in res.output
    assert [r["id"] for r in read_jsonl(out)] == ["keep"]
    rejected = read_jsonl(tmp_path / "kept.rejected.jsonl")
    assert [r["id"] for r in rejected] == ["drop"]
    assert not (tmp_path / "kept.quarantine.jsonl").exists()


def test_filter_remote_quarantine_strict(runner, tmp_path, fake_backend, monkeypatch):
    fake_backend.scripts["/score"] = lambda payload: (500, {"error": "down"})
    cfg = write_backend_config(tmp_path, fake_backend, monkeypatch)
    src = write_dataset(
        tmp_path / "in.jsonl",
        [{"id": "r1", "source_en": "a", "target_cs": "ก"}],
    )
    out = tmp_path / "kept.jsonl"
    res = runner.invoke(
        main, ["filter", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg), "--strict"],
    )
    assert res.exit_code == 1
    quarantined = read_jsonl(tmp_path / "kept.quarantine.jsonl")
    assert quarantined[0]["id"] == "r1"
    assert quarantined[0]["error"]


def test_filter_bad_threshold(runner, tmp_path):
    src = sample_dataset(tmp_path / "in.jsonl")
    res = runner.invoke(
        main, ["filter", "--input", str(src), "--output",
               str(tmp_path / "o.jsonl"), "--scorer", "dice",
               "--threshold", "1.5"],
    )
    assert res.exit_code == 1


# --- augment -----------------------------------------------------------------


def rephrase_script(payload):
    text = payload["prompt"].rstrip("\n").rsplit("\n", 1)[-1]
    return {"text": "R:" + text}


def test_augment_doubles_dataset(runner, tmp_path, fake_backend, monkeypatch):
    fake_backend.scripts["/rephrase"] = rephrase_script
    fake_backend.scripts["/translate"] = echo_translator
    cfg = write_backend_config(tmp_path, fake_backend, monkeypatch)
    src = sample_dataset(tmp_path / "in.jsonl")
    out = tmp_path / "aug.jsonl"

    res = runner.invoke(
        main, ["augment", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg)],
    )
    assert res.exit_code == 0, res.output
    assert "augmented 2 of 2 records (0 failures)" in res.output
    rows = read_jsonl(out)
    assert [r["id"] for r in rows] == ["r1", "r2", "r1-aug", "r2-aug"]
    child = rows[2]
    assert child["provenance"] == "augmented"
    assert child["target_cs"] == "R:กิน metformin ทุกวัน"
    assert child["source_en"] == "TH:R:กิน metformin ทุกวัน"
    assert child["meta"]["parent"] == "r1"


def test_augment_strict_on_failure(runner, tmp_path, fake_backend, monkeypatch):
    fake_backend.scripts["/rephrase"] = lambda payload: {"text": "   "}
    fake_backend.scripts["/translate"] = echo_translator
    cfg = write_backend_config(tmp_path, fake_backend, monkeypatch)
    src = sample_dataset(tmp_path / "in.jsonl")
    out = tmp_path / "aug.jsonl"

    res = runner.invoke(
        main, ["augment", "--input", str(src), "--output", str(out),
               "--backend-config", str(cfg), "--strict"],
    )
    assert res.exit_code == 1
    assert "2 failures" in res.output
    # parents still written
    assert [r["id"] for r in read_jsonl(out)] == ["r1", "r2"]


# --- eval --------------------------------------------------------------------


def test_eval_writes_reports(runner, tmp_path):
    refs = write_dataset(
        tmp_path / "refs.jsonl",
        [
            {"id": "r1", "source_en": "ct scan", "target_cs": "ct scan ของผู้ป่วย"},
            {"id": "r2", "source_en": "blood test", "target_cs": "ตรวจ blood"},
        ],
    )
    # hypotheses on purpose in reversed file order
    hyps = write_dataset(
        tmp_path / "hyps.jsonl",
        [
            {"id": "r2", "source_en": "blood test", "target_cs": "ตรวจ blood"},
            {"id": "r1", "source_en": "ct scan", "target_cs": "ct scan ผู้ป่วย"},
        ],
    )
    out = tmp_path / "report"
    res = runner.invoke(
        main, ["eval", "--input", str(hyps), "--references", str(refs),
               "--output", str(out), "--system-id", "demo"],
    )
    assert res.exit_code == 0, res.output
    assert "evaluated 2 segments" in res.output

    doc = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert doc["system_id"] == "demo"
    assert doc["support"] == 2

    with open(tmp_path / "report.csv", encoding="utf-8", newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["segment", "CS F1", "BLEU", "chrF", "CER", "WER", "SEM", "METEOR"]
    # rows follow reference id order, corpus row last
    assert [r[0] for r in table[1:]] == ["r1", "r2", "corpus"]
    # r2 matches its reference exactly
    r2 = table[2]
    assert float(r2[1]) == 1.0
    assert float(r2[4]) == 0.0


def test_eval_id_mismatch(runner, tmp_path):
    refs = write_dataset(
        tmp_path / "refs.jsonl",
        [{"id": "r1", "source_en": "a", "target_cs": "ก"}],
    )
    hyps = write_dataset(
        tmp_path / "hyps.jsonl",
        [{"id": "zz", "source_en": "a", "target_cs": "ก"}],
    )
    res = runner.invoke(
        main, ["eval", "--input", str(hyps), "--references", str(refs),
               "--output", str(tmp_path / "rep")],
    )
    assert res.exit_code == 1
    assert "id mismatch" in res.output


# --- stats / factual / rate ---------------------------------------------------


def test_stats_outputs_json(runner, tmp_path):
    src = sample_dataset(tmp_path / "in.jsonl")
    out = tmp_path / "stats.json"
    res = runner.invoke(
        main, ["stats", "--input", str(src), "--output", str(out)],
    )
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["samples"] == 2
    assert doc["english_tokens"] == 2
    assert 0 < doc["ratio_en_all"] < 1
    shown = res.output.strip()
    assert shown.startswith("2 / ")


def test_factual_command(runner, tmp_path):
    sheets = [
        {"evaluator_id": "e1", "scores": {"a": [4.5, 6.5, 5, 7], "b": [2, 2]}},
        {"evaluator_id": "e2", "scores": {"a": [3, 3], "b": [2, 2]}},
    ]
    src = tmp_path / "sheets.json"
    src.write_text(json.dumps(sheets), encoding="utf-8")
    out = tmp_path / "factual.json"

    res = runner.invoke(main, ["factual", "--input", str(src), "--output", str(out)])
    assert res.exit_code == 0, res.output
    lines = res.output.strip().splitlines()
    assert lines[0] == "a\t4.375"
    assert lines[1] == "b\t2.000"
    assert json.loads(out.read_text(encoding="utf-8")) == {"a": 4.375, "b": 2.0}


def test_factual_strict_missing_system(runner, tmp_path):
    sheets = [
        {"evaluator_id": "e1", "scores": {"a": [1], "b": [2]}},
        {"evaluator_id": "e2", "scores": {"a": [1]}},
    ]
    src = tmp_path / "sheets.json"
    src.write_text(json.dumps(sheets), encoding="utf-8")
    res = runner.invoke(main, ["factual", "--input", str(src), "--strict"])
    assert res.exit_code == 1
    assert "bad score sheets" in res.output


def test_rate_command(runner, tmp_path):
    games = [
        {"winner": "a", "loser": "b"},
        {"winner": "b", "loser": "c"},
        {"winner": "a", "loser": "c"},
    ]
    src = tmp_path / "outcomes.jsonl"
    src.write_text(
        "\n".join(json.dumps(g) for g in games) + "\n", encoding="utf-8"
    )
    out = tmp_path / "board.csv"
    res = runner.invoke(main, ["rate", "--outcomes", str(src), "--output", str(out)])
    assert res.exit_code == 0, res.output

    with open(out, encoding="utf-8", newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["system_id", "rating", "rd", "ci_lo", "ci_hi", "games"]
    assert [r[0] for r in table[1:]] == ["a", "b", "c"]
    assert table[2][1] == "1500.00"
    assert table[1][5] == "2"

    # echoed lines use the printable rating form
    expected = rating.glicko_rate(
        rating.initial_ratings(["a", "b", "c"]),
        [rating.PairwiseOutcome(g["winner"], g["loser"]) for g in games],
    )
    assert rating.format_rating(expected["a"]) in res.output


def test_rate_accepts_export_document(runner, tmp_path):
    doc = {"outcomes": [{"winner": "a", "loser": "b"}], "responses_used": 1}
    src = tmp_path / "export.json"
    src.write_text(json.dumps(doc), encoding="utf-8")
    out = tmp_path / "board.csv"
    res = runner.invoke(main, ["rate", "--outcomes", str(src), "--output", str(out)])
    assert res.exit_code == 0, res.output
    with open(out, encoding="utf-8", newline="") as fh:
        table = list(csv.reader(fh))
    assert [r[0] for r in table[1:]] == ["a", "b"]


def test_rate_rejects_garbage(runner, tmp_path):
    src = tmp_path / "outcomes.json"
    src.write_text('{"no": "outcomes"}', encoding="utf-8")
    res = runner.invoke(
        main, ["rate", "--outcomes", str(src), "--output", str(tmp_path / "x.csv")],
    )
    assert res.exit_code == 1
    assert "cannot read outcomes" in res.output


def test_bad_dataset_is_a_clean_error(runner, tmp_path):
    src = tmp_path / "in.jsonl"
    src.write_text('{"id": "r1"}\n', encoding="utf-8")
    res = runner.invoke(
        main, ["stats", "--input", str(src)],
    )
    assert res.exit_code == 1
    assert "cannot load" in res.output
