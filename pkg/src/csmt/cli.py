"""Command line interface for the pipeline stages.

Commands mirror the processing order: mask, translate, unmask (or the
one-shot pseudo), chunk, filter, augment, eval, stats, factual, rate,
and serve.  Every command is deterministic given its inputs, the seed,
and the backend cache state; --strict turns recoverable data problems
into exit code 1.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click

from . import __version__, backends, datapipe, masking, metrics, rating, textseg
from .errors import CsmtError, PlaceholderLost

DEFAULT_SEED = 42


def _fail(message: str):
    raise click.ClickException(message)


def _load_suite(path: str | None, seed: int) -> backends.BackendSuite:
    if path is None:
        _fail("--backend-config is required for this command")
    try:
        return backends.load_backend_suite(path, rng=random.Random(seed))
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _fail(f"cannot load backend config {path}: {exc}")


def _need(suite: backends.BackendSuite, role: str):
    client = getattr(suite, role)
    if client is None:
        _fail(f"backend config has no {role!r} section")
    return client


def _segmenter(dictionary: str | None) -> textseg.SegmenterConfig:
    if dictionary is None:
        return textseg.default_config()
    return textseg.SegmenterConfig(textseg.load_dictionary(dictionary))


def _write_jsonl(path: str, rows: list[dict]):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _load_dataset(path: str) -> datapipe.Dataset:
    try:
        return datapipe.Dataset.load(path)
    except CsmtError as exc:
        _fail(f"cannot load {path}: {exc}")


def _parse_with_projection(text: str, annotated: str, meta: dict):
    plain, spans = masking.parse_annotation(annotated)
    if plain != text:
        spans, dropped = masking.project_spans(text, spans)
        if dropped:
            meta["dropped_keywords"] = dropped
    return plain, spans


@click.group()
@click.version_option(__version__)
def main():
    """Code-switched translation pipeline tools."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--backend-config", type=click.Path(exists=True))
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--strict", is_flag=True, help="Fail on any annotation error.")
def mask(input_path, output_path, backend_config, seed, strict):
    """Annotate keywords and mask them with placeholders."""
    suite = _load_suite(backend_config, seed)
    annotator = _need(suite, "annotator")
    ds = _load_dataset(input_path)
    rows = []
    errors = 0
    for rec in ds:
        meta: dict = {}
        spans = []
        try:
            ann = annotator.annotate(rec.source_en)
            plain, spans = _parse_with_projection(rec.source_en, ann.text, meta)
        except masking.MalformedAnnotation as exc:
            meta["annotation_error"] = str(exc)
            errors += 1
        except CsmtError as exc:
            _fail(f"record {rec.id}: {exc}")
        masked = masking.apply_mask(rec.source_en, spans)
        rows.append(
            {
                "id": rec.id,
                "source_en": rec.source_en,
                "masked": masked.masked,
                "placeholders": {str(k): v for k, v in masked.placeholders.items()},
                **({"meta": meta} if meta else {}),
            }
        )
    _write_jsonl(output_path, rows)
    click.echo(f"masked {len(rows)} records ({errors} annotation failures)")
    if strict and errors:
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--backend-config", type=click.Path(exists=True))
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--source", default="en", show_default=True)
@click.option("--target", default="th", show_default=True)
def translate(input_path, output_path, backend_config, seed, source, target):
    """Translate the masked texts."""
    suite = _load_suite(backend_config, seed)
    translator = _need(suite, "translator")
    rows = _read_jsonl(input_path)
    for row in rows:
        try:
            result = translator.translate(row["masked"], source=source, target=target)
        except CsmtError as exc:
            _fail(f"record {row.get('id', '?')}: {exc}")
        row["translated_masked"] = result.text
    _write_jsonl(output_path, rows)
    click.echo(f"translated {len(rows)} records")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option(
    "--on-lost",
    type=click.Choice(["drop", "append"]),
    default="drop",
    show_default=True,
    help="Drop records with unrecoverable placeholders, or append the surfaces.",
)
@click.option("--strict", is_flag=True, help="Exit 1 when any record is dropped.")
def unmask(input_path, output_path, on_lost, strict):
    """Restore keyword surfaces into the translations."""
    rows = _read_jsonl(input_path)
    policy = masking.RecoveryPolicy(
        on_lost="append" if on_lost == "append" else "raise"
    )
    records = []
    dropped = []
    for row in rows:
        masked = masking.MaskedText(
            row["masked"],
            {int(k): v for k, v in row["placeholders"].items()},
            row["source_en"],
        )
        try:
            restored = masking.restore_mask(row["translated_masked"], masked, policy)
        except PlaceholderLost as exc:
            dropped.append((row["id"], exc.placeholder_ids))
            continue
        meta = dict(row.get("meta", {}))
        meta["keywords"] = len(masked.placeholders)
        meta["recovered_exact"] = restored.count("exact")
        meta["recovered_fuzzy"] = restored.count("fuzzy")
        meta["appended"] = restored.count("appended")
        records.append(
            datapipe.ParallelRecord(
                id=row["id"],
                source_en=row["source_en"],
                target_cs=restored.text,
                provenance="pseudo",
                meta=meta,
            )
        )
    datapipe.Dataset(records).save(output_path)
    click.echo(f"restored {len(records)} records, dropped {len(dropped)}")
    for rid, ids in dropped:
        click.echo(f"  dropped {rid}: lost placeholders {list(ids)}", err=True)
    if strict and dropped:
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--backend-config", type=click.Path(exists=True))
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option(
    "--on-lost",
    type=click.Choice(["drop", "append"]),
    default="drop",
    show_default=True,
)
@click.option("--strict", is_flag=True, help="Exit 1 when any record is dropped.")
def pseudo(input_path, output_path, backend_config, seed, on_lost, strict):
    """One-shot mask, translate, and unmask."""
    suite = _load_suite(backend_config, seed)
    annotator = _need(suite, "annotator")
    translator = _need(suite, "translator")
    ds = _load_dataset(input_path)
    policy = masking.RecoveryPolicy(
        on_lost="append" if on_lost == "append" else "raise"
    )
    records = []
    dropped = []
    for rec in ds:
        try:
            out = masking.pseudo_cs_translate(
                rec.source_en, annotator, translator, policy=policy, record_id=rec.id
            )
        except PlaceholderLost as exc:
            dropped.append((rec.id, exc.placeholder_ids))
            continue
        except CsmtError as exc:
            _fail(f"record {rec.id}: {exc}")
        records.append(out)
    datapipe.Dataset(records).save(output_path)
    click.echo(f"produced {len(records)} pseudo records, dropped {len(dropped)}")
    if strict and dropped:
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", type=click.Path())
@click.option("--max-tokens", type=int, default=255, show_default=True)
@click.option("--dictionary", type=click.Path(exists=True), help="Thai word list.")
@click.option(
    "--side",
    type=click.Choice(["source", "target", "both"]),
    default="both",
    show_default=True,
)
@click.option("--strict", is_flag=True, help="Exit 1 on chunk count mismatches.")
def chunk(input_path, output_path, max_tokens, dictionary, side, strict):
    """Split records into translation-sized chunks and check alignment."""
    cfg = _segmenter(dictionary)
    ds = _load_dataset(input_path)
    rows = []
    mismatches = 0
    for rec in ds:
        row: dict = {"id": rec.id}
        if side in ("source", "both"):
            row["source_chunks"] = [
                c.text for c in textseg.chunk(rec.source_en, cfg, max_tokens)
            ]
        if side in ("target", "both"):
            row["target_chunks"] = [
                c.text for c in textseg.chunk(rec.target_cs, cfg, max_tokens)
            ]
        if side == "both":
            aligned = len(row["source_chunks"]) == len(row["target_chunks"])
            row["aligned"] = aligned
            if not aligned:
                mismatches += 1
        rows.append(row)
    if output_path:
        _write_jsonl(output_path, rows)
    click.echo(f"chunked {len(rows)} records ({mismatches} misaligned)")
    if strict and mismatches:
        sys.exit(1)


@main.command("filter")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--threshold", type=float, default=0.6, show_default=True)
@click.option("--backend-config", type=click.Path(exists=True))
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option(
    "--scorer",
    type=click.Choice(["remote", "dice"]),
    default="remote",
    show_default=True,
    help="dice is the offline stub scorer.",
)
@click.option("--strict", is_flag=True, help="Exit 1 when any record is quarantined.")
def filter_cmd(input_path, output_path, threshold, backend_config, seed, scorer, strict):
    """Drop records scoring under the threshold (boundary kept)."""
    if scorer == "dice":
        provider: metrics.ScoreProvider = metrics.DiceProvider()
    else:
        suite = _load_suite(backend_config, seed)
        provider = _need(suite, "scorer")
    ds = _load_dataset(input_path)
    try:
        result = datapipe.filter_by_score(ds, provider, threshold)
    except ValueError as exc:
        _fail(str(exc))
    result.kept.save(output_path)
    base = Path(output_path)
    if len(result.rejected):
        result.rejected.save(base.with_suffix(".rejected.jsonl"))
    if result.quarantined:
        _write_jsonl(
            str(base.with_suffix(".quarantine.jsonl")),
            [{"id": rid, "error": err} for rid, err in result.quarantined],
        )
    click.echo(
        f"kept {len(result.kept)} of {len(ds)} records "
        f"(rejected {len(result.rejected)}, quarantined {len(result.quarantined)})"
    )
    if strict and result.quarantined:
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--backend-config", type=click.Path(exists=True))
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--strict", is_flag=True, help="Exit 1 when any record fails.")
def augment(input_path, output_path, backend_config, seed, strict):
    """Rephrase targets and back-translate new sources; writes parents
    plus children."""
    suite = _load_suite(backend_config, seed)
    rephraser = _need(suite, "rephraser")
    translator = _need(suite, "translator")
    ds = _load_dataset(input_path)
    children, failures = datapipe.augment_dataset(ds, rephraser, translator)
    combined = datapipe.Dataset(list(ds) + list(children))
    combined.save(output_path)
    click.echo(
        f"augmented {len(children)} of {len(ds)} records ({len(failures)} failures)"
    )
    for rid, err in failures:
        click.echo(f"  failed {rid}: {err}", err=True)
    if strict and failures:
        sys.exit(1)


@main.command("eval")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="System outputs (dataset JSONL, target_cs is the hypothesis).")
@click.option("--references", "refs_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path(),
              help="Report basename; writes <output>.json and <output>.csv.")
@click.option("--backend-config", type=click.Path(exists=True))
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option(
    "--scorer",
    type=click.Choice(["none", "remote", "dice"]),
    default="none",
    show_default=True,
)
@click.option("--dictionary", type=click.Path(exists=True), help="Thai word list.")
@click.option("--system-id", default="system", show_default=True)
def eval_cmd(input_path, refs_path, output_path, backend_config, seed, scorer, dictionary, system_id):
    """Score system outputs against references, matched by record id."""
    cfg = _segmenter(dictionary)
    hyp = _load_dataset(input_path)
    ref = _load_dataset(refs_path)
    missing = [rid for rid in ref.ids() if rid not in set(hyp.ids())]
    extra = [rid for rid in hyp.ids() if rid not in set(ref.ids())]
    if missing or extra:
        _fail(
            f"id mismatch between outputs and references "
            f"(missing {len(missing)}, extra {len(extra)})"
        )
    provider = None
    if scorer == "dice":
        provider = metrics.DiceProvider(cfg)
    elif scorer == "remote":
        suite = _load_suite(backend_config, seed)
        provider = _need(suite, "scorer")
    ordered = [hyp.by_id(rid) for rid in ref.ids()]
    report = metrics.evaluate_corpus(
        [r.target_cs for r in ordered],
        [r.target_cs for r in ref],
        sources=[r.source_en for r in ref],
        cfg=cfg,
        provider=provider,
        system_id=system_id,
        segment_ids=ref.ids(),
    )
    report.write_json(f"{output_path}.json")
    report.write_csv(f"{output_path}.csv")
    agg = {k: round(v.value, 4) for k, v in sorted(report.aggregates.items())}
    click.echo(f"evaluated {report.support} segments: {agg}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", type=click.Path())
@click.option("--dictionary", type=click.Path(exists=True), help="Thai word list.")
def stats(input_path, output_path, dictionary):
    """Corpus statistics: samples / sentences / English tokens / ratio."""
    cfg = _segmenter(dictionary)
    ds = _load_dataset(input_path)
    st = datapipe.dataset_stats(ds, cfg)
    click.echo(st.table_row())
    if output_path:
        Path(output_path).write_text(
            json.dumps(
                {
                    "samples": st.samples,
                    "sentences": st.sentences,
                    "english_tokens": st.english_tokens,
                    "word_tokens": st.word_tokens,
                    "ratio_en_all": st.ratio_en_all,
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="Score sheets JSON: [{evaluator_id, scores: {system: [..]}}].")
@click.option("--output", "output_path", type=click.Path())
@click.option("--strict", is_flag=True, help="Every sheet must cover every system.")
def factual(input_path, output_path, strict):
    """Aggregate factual score sheets: mean over evaluator medians."""
    raw = json.loads(Path(input_path).read_text(encoding="utf-8"))
    try:
        sheets = [
            rating.FactualScoreSheet(d["evaluator_id"], {
                s: tuple(v) for s, v in d["scores"].items()
            })
            for d in raw
        ]
        table = rating.factual_aggregate(sheets, strict=strict)
    except (KeyError, ValueError, CsmtError) as exc:
        _fail(f"bad score sheets: {exc}")
    for system, value in sorted(table.items(), key=lambda kv: -kv[1]):
        click.echo(f"{system}\t{value:.3f}")
    if output_path:
        Path(output_path).write_text(
            json.dumps(table, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


@main.command()
@click.option("--outcomes", "outcomes_path", required=True, type=click.Path(exists=True),
              help="Export JSON with an 'outcomes' list, or JSONL of {winner, loser}.")
@click.option("--output", "output_path", required=True, type=click.Path(),
              help="Leaderboard CSV path.")
def rate(outcomes_path, output_path):
    """Glicko leaderboard from pairwise outcomes (one rating period)."""
    text = Path(outcomes_path).read_text(encoding="utf-8").strip()
    try:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            doc = [json.loads(line) for line in text.splitlines() if line.strip()]
        entries = doc["outcomes"] if isinstance(doc, dict) else doc
        games = [rating.PairwiseOutcome(e["winner"], e["loser"]) for e in entries]
    except (KeyError, TypeError, ValueError) as exc:
        _fail(f"cannot read outcomes: {exc}")
    systems = sorted({s for g in games for s in (g.winner, g.loser)})
    rated = rating.glicko_rate(rating.initial_ratings(systems), games)
    rows = rating.leaderboard(rated, games)
    with open(output_path, "w", encoding="utf-8", newline="") as fh:
        import csv

        w = csv.writer(fh)
        w.writerow(("system_id", "rating", "rd", "ci_lo", "ci_hi", "games"))
        for row in rows:
            w.writerow(
                (
                    row.system_id,
                    f"{row.rating:.2f}",
                    f"{row.rd:.2f}",
                    f"{row.ci_lo:.2f}",
                    f"{row.ci_hi:.2f}",
                    row.games,
                )
            )
    for row in rows:
        player = rated[row.system_id]
        click.echo(f"{row.system_id}\t{rating.format_rating(player)}\t{row.games} games")
    click.echo(f"wrote {output_path}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--testset", "testset_path", required=True, type=click.Path(exists=True))
@click.option("--instructions", "instructions_path", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8099, show_default=True)
@click.option("--min-duration", type=float, default=300.0, show_default=True,
              help="Seconds under which a submission is time-flagged.")
@click.option("--ordering-threshold", type=float, default=0.1, show_default=True)
def serve(store_dir, testset_path, instructions_path, host, port, min_duration, ordering_threshold):
    """Run the ranking survey service."""
    import uvicorn

    from .surveysvc import JournalStore, load_survey_items
    from .surveysvc.api import create_app

    instructions = None
    if instructions_path:
        instructions = Path(instructions_path).read_text(encoding="utf-8")
    app = create_app(
        JournalStore(store_dir),
        load_survey_items(testset_path),
        instructions=instructions,
        min_duration_s=min_duration,
        ordering_threshold=ordering_threshold,
    )
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
