"""Parallel dataset records, JSONL persistence, filtering, augmentation,
and corpus statistics.

A record pairs an English source with a code-switched Thai target and
carries provenance, cached scores, and free-form metadata.  Files hold
one JSON object per line with a stable field order, so rewriting an
unchanged dataset is byte-identical.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Iterator

from . import textseg
from .errors import AugmentationRejected, DuplicateId, ParseError
from .metrics import ScoreProvider

__all__ = [
    "PROVENANCE",
    "ParallelRecord",
    "Dataset",
    "FilterResult",
    "DatasetStats",
    "augment_record",
    "augment_dataset",
    "filter_by_score",
    "dataset_stats",
]

PROVENANCE = ("pseudo", "augmented", "human", "model_output")

_REQUIRED = ("id", "source_en", "target_cs")
_OPTIONAL = ("provenance", "scores", "meta")

_TERMINATOR_RE = re.compile(r"[.!?]+")


@dataclass
class ParallelRecord:
    """One English/code-switched-Thai pair with provenance."""

    id: str
    source_en: str
    target_cs: str
    provenance: str = "model_output"
    scores: dict[str, float] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise ValueError("record id must be a non-empty string")
        if self.provenance not in PROVENANCE:
            raise ValueError(
                f"provenance {self.provenance!r} not one of {PROVENANCE}"
            )

    def to_json_dict(self) -> dict:
        out: dict[str, Any] = {
            "id": self.id,
            "source_en": self.source_en,
            "target_cs": self.target_cs,
            "provenance": self.provenance,
        }
        if self.scores:
            out["scores"] = self.scores
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "ParallelRecord":
        unknown = set(d) - set(_REQUIRED) - set(_OPTIONAL)
        if unknown:
            raise ValueError(f"unknown fields: {sorted(unknown)}")
        missing = [k for k in _REQUIRED if k not in d]
        if missing:
            raise ValueError(f"missing fields: {missing}")
        for k in _REQUIRED:
            if not isinstance(d[k], str):
                raise ValueError(f"field {k!r} must be a string")
        return cls(
            id=d["id"],
            source_en=d["source_en"],
            target_cs=d["target_cs"],
            provenance=d.get("provenance", "model_output"),
            scores=dict(d.get("scores", {})),
            meta=dict(d.get("meta", {})),
        )


class Dataset:
    """An ordered collection of records with unique ids."""

    def __init__(self, records: Iterable[ParallelRecord] = ()):
        self.records: list[ParallelRecord] = list(records)
        self._index: dict[str, ParallelRecord] = {}
        for rec in self.records:
            if rec.id in self._index:
                raise DuplicateId(f"duplicate record id {rec.id!r}")
            self._index[rec.id] = rec

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ParallelRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> ParallelRecord:
        return self.records[i]

    def by_id(self, record_id: str) -> ParallelRecord:
        return self._index[record_id]

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        """Read JSONL; blank lines are skipped.

        raises ParseError with the 1-based line number on bad lines,
        DuplicateId on repeated ids.
        """
        records = []
        seen: set[str] = set()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(lineno, f"invalid JSON: {exc.msg}") from exc
                if not isinstance(d, dict):
                    raise ParseError(lineno, "line is not a JSON object")
                try:
                    rec = ParallelRecord.from_json_dict(d)
                except ValueError as exc:
                    raise ParseError(lineno, str(exc)) from exc
                if rec.id in seen:
                    raise DuplicateId(f"duplicate record id {rec.id!r} at line {lineno}")
                seen.add(rec.id)
                records.append(rec)
        return cls(records)

    def save(self, path: str | Path):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False) + "\n")


def augment_record(record, rephraser, translator, new_id: str | None = None) -> ParallelRecord:
    """Rephrase the target, back-translate it into a fresh source.

    The child keeps the code-switched character of the parent (the
    rephraser is instructed to preserve English terms) and records the
    parent id in meta.
    raises AugmentationRejected when the rephrase comes back blank.
    """
    rephrased = rephraser.rephrase(record.target_cs)
    if not rephrased.text.strip():
        raise AugmentationRejected(f"rephrase of {record.id!r} came back blank")
    back = translator.translate(rephrased.text, source="th", target="en")
    return ParallelRecord(
        id=new_id or f"{record.id}-aug",
        source_en=back.text,
        target_cs=rephrased.text,
        provenance="augmented",
        meta={"parent": record.id},
    )


def augment_dataset(
    dataset: Dataset, rephraser, translator
) -> tuple[Dataset, list[tuple[str, str]]]:
    """Augment every record; failures are collected, not raised.

    Returns (augmented records only, [(record id, error)]).
    """
    out: list[ParallelRecord] = []
    failures: list[tuple[str, str]] = []
    for rec in dataset:
        try:
            out.append(augment_record(rec, rephraser, translator))
        except Exception as exc:
            failures.append((rec.id, str(exc)))
    return Dataset(out), failures


@dataclass
class FilterResult:
    kept: Dataset
    rejected: Dataset
    quarantined: list[tuple[str, str]]


def filter_by_score(
    dataset: Dataset, provider: ScoreProvider, threshold: float = 0.6
) -> FilterResult:
    """Keep records the provider scores >= threshold (boundary kept).

    Scores are cached into each record's scores under the provider
    name; records the provider fails on are quarantined with the error
    instead of being dropped silently.  Re-filtering the kept set with
    the same provider and threshold keeps everything.
    pre: 0 <= threshold <= 1
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    kept: list[ParallelRecord] = []
    rejected: list[ParallelRecord] = []
    quarantined: list[tuple[str, str]] = []
    for rec in dataset:
        try:
            score = float(provider.score(rec.source_en, rec.target_cs))
        except Exception as exc:
            quarantined.append((rec.id, str(exc)))
            continue
        scored = replace(rec, scores={**rec.scores, provider.name: score})
        if score >= threshold:
            kept.append(scored)
        else:
            rejected.append(scored)
    return FilterResult(Dataset(kept), Dataset(rejected), quarantined)


@dataclass(frozen=True)
class DatasetStats:
    """Target-side corpus counts.

    word_tokens counts Latin, Thai, and numeric tokens; the sentence
    count is heuristic: terminator runs plus whitespace gaps between
    Thai tokens, at least one per non-blank target.
    """

    samples: int
    sentences: int
    english_tokens: int
    word_tokens: int

    @property
    def ratio_en_all(self) -> float:
        if self.word_tokens == 0:
            return 0.0
        return self.english_tokens / self.word_tokens

    def table_row(self) -> str:
        return (
            f"{self.samples:,} / {self.sentences:,} / "
            f"{self.english_tokens:,} / {self.ratio_en_all * 100:.1f}%"
        )

    def __add__(self, other: "DatasetStats") -> "DatasetStats":
        return DatasetStats(
            self.samples + other.samples,
            self.sentences + other.sentences,
            self.english_tokens + other.english_tokens,
            self.word_tokens + other.word_tokens,
        )


def _count_sentences(text: str, tokens: list[textseg.Token]) -> int:
    if not text.strip():
        return 0
    n = len(_TERMINATOR_RE.findall(text))
    for i in range(1, len(tokens) - 1):
        if (
            tokens[i].token_class is textseg.TokenClass.WHITESPACE
            and tokens[i - 1].token_class is textseg.TokenClass.THAI
            and tokens[i + 1].token_class is textseg.TokenClass.THAI
        ):
            n += 1
    return max(n, 1)


def dataset_stats(
    dataset: Dataset, cfg: textseg.SegmenterConfig | None = None
) -> DatasetStats:
    """Count samples, sentences, and token classes on the target side."""
    samples = len(dataset)
    sentences = 0
    english = 0
    words = 0
    word_classes = (
        textseg.TokenClass.LATIN,
        textseg.TokenClass.THAI,
        textseg.TokenClass.NUMERIC,
    )
    for rec in dataset:
        tokens = textseg.tokenize(rec.target_cs, cfg)
        sentences += _count_sentences(rec.target_cs, tokens)
        for t in tokens:
            if t.token_class is textseg.TokenClass.LATIN:
                english += 1
            if t.token_class in word_classes:
                words += 1
    return DatasetStats(samples, sentences, english, words)
