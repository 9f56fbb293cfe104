"""Keyword masking for code-switched translation.

The pipeline runs annotate -> mask -> translate -> restore: an
annotator tags medical keywords in the English source, each tagged
span is replaced by an opaque placeholder [[K<n>]], the masked text is
machine-translated, and the placeholders are swapped back for their
original English surfaces.  Restoration tolerates the ways MT engines
mangle placeholders (case changes, inserted whitespace, one bracket
gained or lost per side); anything it cannot find is handled per
RecoveryPolicy instead of being dropped silently.
"""

from __future__ import annotations

import enum
import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from .backends import Annotator, Translator
from .datapipe import ParallelRecord
from .errors import MalformedAnnotation, OverlappingSpans, PlaceholderLost
from .metrics import PrecisionRecallF1, multiset_prf

__all__ = [
    "KeywordCategory",
    "KeywordSpan",
    "MaskedText",
    "RecoveryPolicy",
    "PlaceholderEvent",
    "RestoreResult",
    "placeholder_token",
    "parse_annotation",
    "apply_mask",
    "restore_mask",
    "pseudo_cs_translate",
    "ner_score",
]

_TAG_RE = re.compile(r"<(/?)([A-Za-z][A-Za-z0-9_-]*)>")
_ENVELOPE_OPEN = "<annotated>"
_ENVELOPE_CLOSE = "</annotated>"

# Append marker for keywords that could not be placed back.
_LOST_MARKER = " [missing-keyword: {surface}]"


class KeywordCategory(enum.Enum):
    PATHO = "patho"
    PHARM = "pharm"
    TAXO = "taxo"
    ANATO = "anato"
    CHEM = "chem"
    MED = "med"
    OTHER = "other"


_CATEGORY_BY_TAG = {c.value: c for c in KeywordCategory}


@dataclass(frozen=True, slots=True)
class KeywordSpan:
    """Half-open [start, end) span of one keyword in plain text."""

    start: int
    end: int
    surface: str
    category: KeywordCategory = KeywordCategory.OTHER

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad span [{self.start}, {self.end})")
        if len(self.surface) != self.end - self.start:
            raise ValueError("surface length does not match span")


@dataclass(frozen=True)
class MaskedText:
    """Masked text plus the placeholder id -> surface mapping."""

    masked: str
    placeholders: Mapping[int, str]
    original: str


@dataclass(frozen=True)
class RecoveryPolicy:
    """How restore_mask treats mangled or missing placeholders.

    fuzzy widens the search to documented mangled forms; on_lost is
    "raise" (PlaceholderLost) or "append" (surfaces appended at the
    end with a marker).
    """

    fuzzy: bool = True
    on_lost: str = "raise"

    def __post_init__(self):
        if self.on_lost not in ("raise", "append"):
            raise ValueError(f"on_lost must be 'raise' or 'append', not {self.on_lost!r}")


@dataclass(frozen=True, slots=True)
class PlaceholderEvent:
    placeholder_id: int
    outcome: str  # "exact" | "fuzzy" | "appended"
    matched: str | None


@dataclass(frozen=True)
class RestoreResult:
    text: str
    events: tuple[PlaceholderEvent, ...]

    def count(self, outcome: str) -> int:
        return sum(1 for e in self.events if e.outcome == outcome)


def placeholder_token(placeholder_id: int) -> str:
    return f"[[K{placeholder_id}]]"


def parse_annotation(annotated: str) -> tuple[str, list[KeywordSpan]]:
    """Extract keyword spans from a tagged annotator answer.

    Returns (plain text, spans); plain is the envelope content with
    all tags removed and span offsets point into it.  Tags outside the
    known category set map to OTHER; empty tag pairs are ignored.
    raises MalformedAnnotation on a missing envelope, nesting, or
    unbalanced tags.
    """
    lo = annotated.find(_ENVELOPE_OPEN)
    hi = annotated.rfind(_ENVELOPE_CLOSE)
    if lo < 0 or hi < 0 or hi < lo:
        raise MalformedAnnotation("missing <annotated> envelope")
    inner = annotated[lo + len(_ENVELOPE_OPEN) : hi]

    parts: list[str] = []
    plain_len = 0
    spans: list[KeywordSpan] = []
    open_name: str | None = None
    open_start = 0
    pos = 0
    for m in _TAG_RE.finditer(inner):
        piece = inner[pos : m.start()]
        parts.append(piece)
        plain_len += len(piece)
        pos = m.end()
        closing = bool(m.group(1))
        name = m.group(2).lower()
        if name == "annotated":
            raise MalformedAnnotation("nested envelope")
        if not closing:
            if open_name is not None:
                raise MalformedAnnotation(f"<{name}> opened inside <{open_name}>")
            open_name = name
            open_start = plain_len
        else:
            if open_name != name:
                raise MalformedAnnotation(f"unbalanced </{name}>")
            if plain_len > open_start:
                surface = parts[-1]
                spans.append(
                    KeywordSpan(
                        open_start,
                        plain_len,
                        surface,
                        _CATEGORY_BY_TAG.get(name, KeywordCategory.OTHER),
                    )
                )
            open_name = None
    if open_name is not None:
        raise MalformedAnnotation(f"<{open_name}> never closed")
    tail = inner[pos:]
    parts.append(tail)
    return "".join(parts), spans


def apply_mask(text: str, spans: Iterable[KeywordSpan]) -> MaskedText:
    """Replace each span with [[K<n>]], numbering left to right.

    pre: every span lies inside text and surface == text[start:end]
    raises OverlappingSpans when spans overlap.
    """
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    parts: list[str] = []
    placeholders: dict[int, str] = {}
    prev_end = 0
    for i, span in enumerate(ordered):
        if span.end > len(text):
            raise ValueError(f"span [{span.start}, {span.end}) outside text")
        if text[span.start : span.end] != span.surface:
            raise ValueError(
                f"span surface {span.surface!r} does not match text at "
                f"[{span.start}, {span.end})"
            )
        if span.start < prev_end:
            raise OverlappingSpans(
                f"span [{span.start}, {span.end}) overlaps the previous span"
            )
        parts.append(text[prev_end : span.start])
        parts.append(placeholder_token(i))
        placeholders[i] = span.surface
        prev_end = span.end
    parts.append(text[prev_end:])
    return MaskedText("".join(parts), placeholders, text)


def _fuzzy_pattern(placeholder_id: int) -> re.Pattern:
    # Tolerated mangling: case change on K, whitespace inside the
    # literal, one bracket gained or lost per side.
    return re.compile(rf"\[{{1,3}}\s*[Kk]\s*{placeholder_id}(?!\d)\s*\]{{1,3}}")


def restore_mask(
    translated: str,
    masked: MaskedText,
    policy: RecoveryPolicy | None = None,
) -> RestoreResult:
    """Swap placeholders in translated text back to their surfaces.

    With policy.fuzzy the tolerant pattern locates occurrences, so a
    canonical literal and its documented mangled forms are both
    replaced (canonical-only hits count as exact); otherwise only the
    canonical literal is searched.  Every occurrence of a placeholder
    is replaced, so a duplicated placeholder yields the surface twice.
    Missing ids follow policy.on_lost.
    """
    if policy is None:
        policy = RecoveryPolicy()
    claimed: list[tuple[int, int, int]] = []  # (start, end, id)
    outcomes: dict[int, str] = {}
    matched_form: dict[int, str] = {}

    def claim(lo: int, hi: int, pid: int) -> bool:
        for s, e, _ in claimed:
            if lo < e and s < hi:
                return False
        claimed.append((lo, hi, pid))
        return True

    for pid in sorted(masked.placeholders):
        literal = placeholder_token(pid)
        if policy.fuzzy:
            forms: list[str] = []
            for m in _fuzzy_pattern(pid).finditer(translated):
                if claim(m.start(), m.end(), pid):
                    forms.append(m.group(0))
            if forms:
                exact = all(f == literal for f in forms)
                outcomes[pid] = "exact" if exact else "fuzzy"
                matched_form[pid] = forms[0]
        else:
            found = False
            start = translated.find(literal)
            while start >= 0:
                if claim(start, start + len(literal), pid):
                    found = True
                start = translated.find(literal, start + len(literal))
            if found:
                outcomes[pid] = "exact"
                matched_form[pid] = literal

    lost = sorted(set(masked.placeholders) - set(outcomes))
    if lost and policy.on_lost == "raise":
        raise PlaceholderLost(lost)

    claimed.sort()
    out: list[str] = []
    pos = 0
    for s, e, pid in claimed:
        out.append(translated[pos:s])
        out.append(masked.placeholders[pid])
        pos = e
    out.append(translated[pos:])
    events = [
        PlaceholderEvent(pid, outcomes[pid], matched_form[pid])
        for pid in sorted(outcomes)
    ]
    for pid in lost:
        out.append(_LOST_MARKER.format(surface=masked.placeholders[pid]))
        events.append(PlaceholderEvent(pid, "appended", None))
    events.sort(key=lambda e: e.placeholder_id)
    return RestoreResult("".join(out), tuple(events))


def project_spans(text: str, spans: Iterable[KeywordSpan]) -> tuple[list[KeywordSpan], list[str]]:
    """Re-anchor spans onto text by left-to-right surface search.

    Used when the annotator edited the text it was told to copy; spans
    whose surfaces cannot be found are dropped and reported.
    """
    projected: list[KeywordSpan] = []
    dropped: list[str] = []
    cursor = 0
    for span in sorted(spans, key=lambda s: s.start):
        at = text.find(span.surface, cursor)
        if at < 0:
            dropped.append(span.surface)
            continue
        projected.append(
            KeywordSpan(at, at + len(span.surface), span.surface, span.category)
        )
        cursor = at + len(span.surface)
    return projected, dropped


def pseudo_cs_translate(
    text: str,
    annotator: Annotator,
    translator: Translator,
    policy: RecoveryPolicy | None = None,
    record_id: str | None = None,
    source: str = "en",
    target: str = "th",
) -> ParallelRecord:
    """Produce one pseudo code-switched record from English text.

    Annotation failures degrade to translating the unmasked text (the
    record's meta notes the error); placeholder loss follows policy.
    Meta records keyword counts, recovery outcomes, cache hits, and
    backend latencies.
    """
    if policy is None:
        policy = RecoveryPolicy()
    meta: dict = {}
    spans: list[KeywordSpan] = []
    ann = None
    try:
        ann = annotator.annotate(text)
        plain, spans = parse_annotation(ann.text)
        if plain != text:
            spans, dropped = project_spans(text, spans)
            if dropped:
                meta["dropped_keywords"] = dropped
    except MalformedAnnotation as exc:
        meta["annotation_error"] = str(exc)
        spans = []

    masked = apply_mask(text, spans)
    mt = translator.translate(masked.masked, source=source, target=target)
    restored = restore_mask(mt.text, masked, policy)

    meta["keywords"] = len(masked.placeholders)
    meta["recovered_exact"] = restored.count("exact")
    meta["recovered_fuzzy"] = restored.count("fuzzy")
    meta["appended"] = restored.count("appended")
    meta["cache_hits"] = {
        "annotator": bool(ann.cache_hit) if ann is not None else False,
        "translator": mt.cache_hit,
    }
    meta["latency_ms"] = {
        "annotator": round(ann.latency_ms, 1) if ann is not None else 0.0,
        "translator": round(mt.latency_ms, 1),
    }
    rid = record_id
    if rid is None:
        rid = "cs-" + hashlib.sha1(text.encode("utf-8")).hexdigest()[:10]
    return ParallelRecord(
        id=rid,
        source_en=text,
        target_cs=restored.text,
        provenance="pseudo",
        meta=meta,
    )


def ner_score(
    predicted: Iterable[str], gold: Iterable[str]
) -> PrecisionRecallF1:
    """Multiset precision/recall/F1 of predicted keyword surfaces
    against gold ones, casefolded."""
    pred = Counter(s.casefold() for s in predicted)
    ref = Counter(s.casefold() for s in gold)
    return multiset_prf(pred, ref)
