"""Translation quality metrics for code-switched output.

Segment metrics: code-switch F1 (Latin-token overlap), BLEU, chrF,
a lightweight exact-match METEOR, CER, and WER.  evaluate_corpus
bundles them into a report with per-segment rows and corpus
aggregates and can attach a semantic score from a ScoreProvider.

Conventions shared by the bounded overlap metrics: two empty sides
compare as perfect, one empty side as zero.  Error-rate metrics raise
EmptyReference when the reference side is empty and the hypothesis is
not; both sides empty give 0.
"""

from __future__ import annotations

import csv
import json
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from . import kernels, textseg
from .errors import EmptyReference, LengthMismatch

__all__ = [
    "PrecisionRecallF1",
    "MetricValue",
    "EvaluationReport",
    "ScoreProvider",
    "DiceProvider",
    "cs_f1",
    "bleu",
    "chrf",
    "meteor_lite",
    "cer",
    "wer",
    "evaluate_corpus",
    "CSV_COLUMNS",
]

# Export column order is fixed; SEM stays empty without a provider.
CSV_COLUMNS = ("CS F1", "BLEU", "chrF", "CER", "WER", "SEM", "METEOR")
_METRIC_KEYS = ("cs_f1", "bleu", "chrf", "cer", "wer", "sem", "meteor")

_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True, slots=True)
class PrecisionRecallF1:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True, slots=True)
class MetricValue:
    name: str
    value: float
    support: int


class ScoreProvider(Protocol):
    """Scores a translation in [0, 1]; higher is better."""

    name: str

    def score(self, source: str, hypothesis: str, reference: str | None = None) -> float: ...


def multiset_prf(hypothesis: Counter, reference: Counter) -> PrecisionRecallF1:
    """Precision/recall/F1 of two multisets.

    Both empty compare as (1, 1, 1), exactly one empty as (0, 0, 0).
    """
    total_h = sum(hypothesis.values())
    total_r = sum(reference.values())
    if total_h == 0 and total_r == 0:
        return PrecisionRecallF1(1.0, 1.0, 1.0)
    if total_h == 0 or total_r == 0:
        return PrecisionRecallF1(0.0, 0.0, 0.0)
    inter = sum((hypothesis & reference).values())
    p = inter / total_h
    r = inter / total_r
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PrecisionRecallF1(p, r, f1)


def cs_f1(
    hypothesis: str,
    reference: str,
    cfg: textseg.SegmenterConfig | None = None,
) -> PrecisionRecallF1:
    """Overlap of casefolded Latin tokens between hypothesis and
    reference, as a multiset precision/recall/F1."""
    return multiset_prf(
        textseg.english_tokens(hypothesis, cfg), textseg.english_tokens(reference, cfg)
    )


def _content_tokens(text: str, cfg: textseg.SegmenterConfig | None) -> list[str]:
    return [
        t.text
        for t in textseg.tokenize(text, cfg)
        if t.token_class is not textseg.TokenClass.WHITESPACE
    ]


def _bleu_stats(
    hyp_tokens: Sequence[str], ref_tokens: Sequence[str], max_n: int
) -> tuple[list[int], list[int]]:
    matches = [0] * max_n
    totals = [0] * max_n
    for n in range(1, max_n + 1):
        m, th, _ = kernels.ngram_overlap(hyp_tokens, ref_tokens, n)
        matches[n - 1] = m
        totals[n - 1] = th
    return matches, totals


def bleu(
    hypotheses: Sequence[str],
    references: Sequence[str],
    cfg: textseg.SegmenterConfig | None = None,
    max_n: int = 4,
) -> float:
    """Corpus BLEU over non-whitespace tokens.

    Modified n-gram precisions up to max_n are pooled over all segment
    pairs; orders >= 2 with zero matches take add-one smoothing; the
    brevity penalty uses pooled lengths.  A corpus identical to its
    reference scores 1.0; an empty hypothesis corpus against non-empty
    references scores 0.0.
    pre: equal non-zero lengths
    """
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise ValueError("empty corpus")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for h, r in zip(hypotheses, references):
        ht = _content_tokens(h, cfg)
        rt = _content_tokens(r, cfg)
        hyp_len += len(ht)
        ref_len += len(rt)
        m, t = _bleu_stats(ht, rt, max_n)
        for i in range(max_n):
            matches[i] += m[i]
            totals[i] += t[i]
    if hyp_len == 0:
        return 1.0 if ref_len == 0 else 0.0
    if matches[0] == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        m, t = matches[n - 1], totals[n - 1]
        if n >= 2 and m == 0:
            p = (m + 1) / (t + 1)
        else:
            p = m / t
        log_sum += math.log(p)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_sum / max_n)


def _chrf_pair(hypothesis: str, reference: str, max_n: int, beta: float) -> float:
    h = _WS_RE.sub("", hypothesis)
    r = _WS_RE.sub("", reference)
    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, max_n + 1):
        m, th, tr = kernels.ngram_overlap(list(h), list(r), n)
        if th == 0 and tr == 0:
            continue
        precisions.append(m / th if th else 0.0)
        recalls.append(m / tr if tr else 0.0)
    if not precisions:
        return 1.0  # nothing on either side at any order
    p = sum(precisions) / len(precisions)
    r_ = sum(recalls) / len(recalls)
    if p + r_ == 0.0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * p * r_ / (b2 * p + r_)


def chrf(
    hypotheses: Sequence[str],
    references: Sequence[str],
    max_n: int = 6,
    beta: float = 2.0,
) -> float:
    """Character n-gram F-score, macro-averaged over segments.

    Whitespace is stripped before forming n-grams (orders 1..max_n);
    orders with no grams on either side are skipped; recall weighs
    beta times precision.
    pre: equal non-zero lengths
    """
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise ValueError("empty corpus")
    return sum(
        _chrf_pair(h, r, max_n, beta) for h, r in zip(hypotheses, references)
    ) / len(hypotheses)


def meteor_lite(
    hypothesis: str,
    reference: str,
    cfg: textseg.SegmenterConfig | None = None,
) -> float:
    """Exact-match METEOR: unigram matches with a fragmentation penalty.

    Tokens are casefolded non-whitespace tokens.  F_mean weighs recall
    9:1 over precision; the penalty is 0.5 * (chunks / matches)^3.
    Identity input with m tokens scores 1 - 0.5 / m^3.
    """
    ht = [t.casefold() for t in _content_tokens(hypothesis, cfg)]
    rt = [t.casefold() for t in _content_tokens(reference, cfg)]
    if not ht and not rt:
        return 1.0
    if not ht or not rt:
        return 0.0
    # Earliest unused reference occurrence per hypothesis token.
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(rt):
        positions.setdefault(tok, []).append(j)
    used: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    for i, tok in enumerate(ht):
        occ = positions.get(tok)
        k = used.get(tok, 0)
        if occ is None or k >= len(occ):
            continue
        used[tok] = k + 1
        pairs.append((i, occ[k]))
    m = len(pairs)
    if m == 0:
        return 0.0
    chunks = 1
    for (h1, r1), (h2, r2) in zip(pairs, pairs[1:]):
        if h2 != h1 + 1 or r2 != r1 + 1:
            chunks += 1
    p = m / len(ht)
    r = m / len(rt)
    f_mean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)


def cer(hypothesis: str, reference: str) -> float:
    """Character error rate over NFC scalar values.

    raises EmptyReference when reference is empty and hypothesis is not.
    """
    h = unicodedata.normalize("NFC", hypothesis)
    r = unicodedata.normalize("NFC", reference)
    if not r:
        if not h:
            return 0.0
        raise EmptyReference("reference has no characters")
    return kernels.edit_distance(list(h), list(r)) / len(r)


def wer(
    hypothesis: str,
    reference: str,
    cfg: textseg.SegmenterConfig | None = None,
) -> float:
    """Word error rate over non-whitespace tokens.

    raises EmptyReference when the reference yields no tokens and the
    hypothesis does.
    """
    ht = _content_tokens(hypothesis, cfg)
    rt = _content_tokens(reference, cfg)
    if not rt:
        if not ht:
            return 0.0
        raise EmptyReference("reference has no tokens")
    return kernels.edit_distance(ht, rt) / len(rt)


class DiceProvider:
    """Deterministic token-overlap stub standing in for a remote
    semantic scorer in tests and dry runs.

    Dice coefficient over casefolded non-whitespace tokens of the
    hypothesis against the reference when given, else the source.
    """

    name = "dice"

    def __init__(self, cfg: textseg.SegmenterConfig | None = None):
        self._cfg = cfg

    def score(self, source: str, hypothesis: str, reference: str | None = None) -> float:
        other = reference if reference is not None else source
        a = Counter(t.casefold() for t in _content_tokens(hypothesis, self._cfg))
        b = Counter(t.casefold() for t in _content_tokens(other, self._cfg))
        total = sum(a.values()) + sum(b.values())
        if total == 0:
            return 1.0
        return 2 * sum((a & b).values()) / total


@dataclass
class EvaluationReport:
    """Per-segment metric rows plus corpus aggregates for one system."""

    system_id: str
    provider_id: str | None
    segments: list[dict]
    aggregates: dict[str, MetricValue]

    @property
    def support(self) -> int:
        return len(self.segments)

    def to_json_dict(self) -> dict:
        return {
            "system_id": self.system_id,
            "provider": self.provider_id,
            "support": self.support,
            "aggregates": {
                k: {"value": v.value, "support": v.support}
                for k, v in self.aggregates.items()
            },
            "segments": self.segments,
        }

    def write_json(self, path: str | Path):
        Path(path).write_text(
            json.dumps(self.to_json_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )

    def write_csv(self, path: str | Path):
        """One row per segment, metric columns in the fixed export
        order, then a final corpus row."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("segment",) + CSV_COLUMNS)
            for row in self.segments:
                w.writerow(
                    [row["segment"]]
                    + ["" if row[k] is None else f"{row[k]:.6f}" for k in _METRIC_KEYS]
                )
            corpus = [
                f"{self.aggregates[k].value:.6f}" if k in self.aggregates else ""
                for k in _METRIC_KEYS
            ]
            w.writerow(["corpus"] + corpus)


def evaluate_corpus(
    hypotheses: Sequence[str],
    references: Sequence[str],
    sources: Sequence[str] | None = None,
    cfg: textseg.SegmenterConfig | None = None,
    provider: ScoreProvider | None = None,
    system_id: str = "system",
    segment_ids: Sequence[str] | None = None,
) -> EvaluationReport:
    """Score a system's outputs against references segment by segment.

    Corpus aggregates: BLEU is pooled over the corpus; CER and WER
    pool edit distances over reference lengths; the remaining metrics
    average per-segment values.  SEM comes from the provider when one
    is given (sources fall back to empty strings).  An empty corpus
    yields support 0 and no aggregates.
    """
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if sources is not None and len(sources) != len(hypotheses):
        raise LengthMismatch(f"{len(sources)} sources vs {len(hypotheses)} hypotheses")
    if segment_ids is not None and len(segment_ids) != len(hypotheses):
        raise LengthMismatch("segment_ids length differs from corpus length")

    provider_id = provider.name if provider is not None else None
    if not hypotheses:
        return EvaluationReport(system_id, provider_id, [], {})

    rows: list[dict] = []
    prf_acc = {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    chrf_acc = 0.0
    meteor_acc = 0.0
    cer_dist = 0
    cer_len = 0
    wer_dist = 0
    wer_len = 0
    sem_acc = 0.0
    sem_n = 0
    for i, (h, r) in enumerate(zip(hypotheses, references)):
        sid = segment_ids[i] if segment_ids is not None else str(i)
        prf = cs_f1(h, r, cfg)
        seg_bleu = bleu([h], [r], cfg)
        seg_chrf = _chrf_pair(h, r, 6, 2.0)
        seg_meteor = meteor_lite(h, r, cfg)

        hc = unicodedata.normalize("NFC", h)
        rc = unicodedata.normalize("NFC", r)
        if not rc:
            if hc:
                raise EmptyReference(f"segment {sid}: reference has no characters")
            d_char = 0
        else:
            d_char = kernels.edit_distance(list(hc), list(rc))
        ht = _content_tokens(h, cfg)
        rt = _content_tokens(r, cfg)
        if not rt:
            if ht:
                raise EmptyReference(f"segment {sid}: reference has no tokens")
            d_tok = 0
        else:
            d_tok = kernels.edit_distance(ht, rt)
        seg_cer = d_char / len(rc) if rc else 0.0
        seg_wer = d_tok / len(rt) if rt else 0.0

        sem = None
        if provider is not None:
            src = sources[i] if sources is not None else ""
            sem = float(provider.score(src, h, r))
            sem_acc += sem
            sem_n += 1

        rows.append(
            {
                "segment": sid,
                "cs_f1": prf.f1,
                "bleu": seg_bleu,
                "chrf": seg_chrf,
                "cer": seg_cer,
                "wer": seg_wer,
                "sem": sem,
                "meteor": seg_meteor,
            }
        )
        prf_acc["precision"] += prf.precision
        prf_acc["recall"] += prf.recall
        prf_acc["f1"] += prf.f1
        chrf_acc += seg_chrf
        meteor_acc += seg_meteor
        cer_dist += d_char
        cer_len += len(rc)
        wer_dist += d_tok
        wer_len += len(rt)

    n = len(hypotheses)
    aggregates = {
        "cs_f1": MetricValue("cs_f1", prf_acc["f1"] / n, n),
        "cs_precision": MetricValue("cs_precision", prf_acc["precision"] / n, n),
        "cs_recall": MetricValue("cs_recall", prf_acc["recall"] / n, n),
        "bleu": MetricValue("bleu", bleu(list(hypotheses), list(references), cfg), n),
        "chrf": MetricValue("chrf", chrf_acc / n, n),
        "cer": MetricValue("cer", cer_dist / cer_len if cer_len else 0.0, n),
        "wer": MetricValue("wer", wer_dist / wer_len if wer_len else 0.0, n),
        "meteor": MetricValue("meteor", meteor_acc / n, n),
    }
    if sem_n:
        aggregates["sem"] = MetricValue("sem", sem_acc / sem_n, sem_n)
    return EvaluationReport(system_id, provider_id, rows, aggregates)
