"""Tokenization of mixed Thai/Latin text and dictionary word segmentation.

Tokens carry a class (Thai, Latin, Numeric, Punct, Whitespace,
Placeholder) and half-open offsets into the input; concatenating token
texts in order reproduces the input exactly.  Thai runs are split by
maximal matching against a word dictionary: the cover with the fewest
words wins, ties prefer the longer leading word, and positions no entry
covers fall back to a single character cluster.  Letters outside the
Thai and Latin scripts group with punctuation.

Inputs are expected in NFC.  The tokenizer never normalizes the text it
covers (that would break the exact-cover guarantee); dictionary entries
are normalized at load instead.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import LengthMismatch

__all__ = [
    "TokenClass",
    "Token",
    "Chunk",
    "SegmenterConfig",
    "load_dictionary",
    "default_config",
    "tokenize",
    "segment_thai",
    "english_tokens",
    "chunk",
    "validate_alignment",
    "PLACEHOLDER_RE",
]

PLACEHOLDER_RE = re.compile(r"\[\[K(\d+)\]\]")

_NUMERIC_RE = re.compile(r"\d(?:\d|[.,](?=\d))*")

# Vowels written before the consonant they modify: U+0E40..U+0E44.
_PREPOSED_VOWELS = frozenset("เแโใไ")

# Marks written above/below/after the base: U+0E31, U+0E33..U+0E3A,
# U+0E47..U+0E4E.
_TRAILING_MARKS = frozenset(
    "ั"
    "ำิีึืฺุู"
    "็่้๊๋์ํ๎"
)

_LATIN_RANGES = (
    (0x0041, 0x005A),
    (0x0061, 0x007A),
    (0x00C0, 0x024F),
    (0x0250, 0x02AF),
    (0x1D00, 0x1D7F),
    (0x1E00, 0x1EFF),
    (0x2C60, 0x2C7F),
    (0xA720, 0xA7FF),
    (0xFB00, 0xFB06),
    (0xFF21, 0xFF3A),
    (0xFF41, 0xFF5A),
)


class TokenClass(enum.Enum):
    THAI = "thai"
    LATIN = "latin"
    NUMERIC = "numeric"
    PUNCT = "punct"
    WHITESPACE = "whitespace"
    PLACEHOLDER = "placeholder"


@dataclass(frozen=True, slots=True)
class Token:
    """One tokenizer output unit with half-open [start, end) offsets."""

    text: str
    token_class: TokenClass
    start: int
    end: int


@dataclass(frozen=True, slots=True)
class Chunk:
    """A contiguous slice of the input holding at most max_tokens
    countable (non-whitespace) tokens."""

    text: str
    start: int
    end: int
    token_count: int


def _is_latin_letter(c: str) -> bool:
    o = ord(c)
    for lo, hi in _LATIN_RANGES:
        if lo <= o <= hi:
            return True
        if o < lo:
            return False
    return False


def _char_class(c: str) -> TokenClass:
    if c.isspace():
        return TokenClass.WHITESPACE
    cat = unicodedata.category(c)
    if cat == "Nd":
        return TokenClass.NUMERIC
    if 0x0E00 <= ord(c) <= 0x0E7F:
        if cat[0] in "LM":
            return TokenClass.THAI
        return TokenClass.PUNCT
    if cat[0] == "L" and _is_latin_letter(c):
        return TokenClass.LATIN
    return TokenClass.PUNCT


_WORD_END = ""


def _build_trie(words: Iterable[str]) -> dict:
    root: dict = {}
    for w in words:
        node = root
        for ch in w:
            node = node.setdefault(ch, {})
        node[_WORD_END] = True
    return root


@dataclass(frozen=True)
class SegmenterConfig:
    """Thai segmentation dictionary plus the longest-entry bound.

    max_word_len defaults to the longest entry; an explicit value must
    not be smaller than that.
    """

    dictionary: frozenset[str]
    max_word_len: int = 0
    _trie: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        entries = frozenset(
            unicodedata.normalize("NFC", w) for w in self.dictionary if w
        )
        object.__setattr__(self, "dictionary", entries)
        longest = max((len(w) for w in entries), default=1)
        if self.max_word_len == 0:
            object.__setattr__(self, "max_word_len", longest)
        elif self.max_word_len < longest:
            raise ValueError(
                f"max_word_len {self.max_word_len} is shorter than the longest "
                f"dictionary entry ({longest})"
            )
        object.__setattr__(self, "_trie", _build_trie(entries))


def load_dictionary(path: str | Path) -> frozenset[str]:
    """Read one word per line, UTF-8; blank lines and # comments skipped.

    Entries are NFC-normalized.
    """
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        w = line.strip()
        if w and not w.startswith("#"):
            words.append(w)
    return frozenset(words)


@lru_cache(maxsize=1)
def default_config() -> SegmenterConfig:
    """Config backed by the packaged general/medical Thai word list."""
    data = resources.files("csmt").joinpath("data/thai_words.txt")
    words = frozenset(
        w.strip()
        for w in data.read_text(encoding="utf-8").splitlines()
        if w.strip() and not w.strip().startswith("#")
    )
    return SegmenterConfig(dictionary=words)


def _cluster_end(run: str, i: int) -> int:
    """End index of one Thai character cluster starting at run[i]."""
    n = len(run)
    c = run[i]
    j = i + 1
    if c in _PREPOSED_VOWELS:
        if j < n and run[j] not in _PREPOSED_VOWELS and run[j] not in _TRAILING_MARKS:
            j += 1
            while j < n and run[j] in _TRAILING_MARKS:
                j += 1
        return j
    while j < n and run[j] in _TRAILING_MARKS:
        j += 1
    return j


def _match_lengths(run: str, i: int, trie: dict, limit: int) -> list[int]:
    """Lengths of dictionary words starting at run[i], ascending."""
    out: list[int] = []
    node = trie
    n = min(len(run), i + limit)
    j = i
    while j < n:
        node = node.get(run[j])
        if node is None:
            break
        j += 1
        if _WORD_END in node:
            out.append(j - i)
    return out


def segment_thai(run: str, cfg: SegmenterConfig) -> list[str]:
    """Split a Thai run into the fewest dictionary words possible.

    Ties prefer the longer leading word.  A position no entry covers
    emits one character cluster (preposed vowel + base + trailing marks).
    The pieces concatenate back to run.
    """
    n = len(run)
    if n == 0:
        return []
    trie = cfg._trie
    limit = cfg.max_word_len
    inf = n + 1
    best = [inf] * (n + 1)
    best[n] = 0
    cut = [1] * n
    for i in range(n - 1, -1, -1):
        lengths = _match_lengths(run, i, trie, limit)
        if not lengths:
            lengths = [_cluster_end(run, i) - i]
        b = inf
        pick = lengths[-1]
        for length in reversed(lengths):
            v = best[i + length] + 1
            if v < b:
                b = v
                pick = length
        best[i] = b
        cut[i] = pick
    out = []
    i = 0
    while i < n:
        j = i + cut[i]
        out.append(run[i:j])
        i = j
    return out


def _scan_plain(text: str, start: int, end: int, cfg: SegmenterConfig, out: list[Token]):
    i = start
    while i < end:
        cls = _char_class(text[i])
        if cls is TokenClass.NUMERIC:
            m = _NUMERIC_RE.match(text, i, end)
            out.append(Token(m.group(0), cls, i, m.end()))
            i = m.end()
            continue
        j = i + 1
        while j < end and _char_class(text[j]) is cls:
            j += 1
        if cls is TokenClass.THAI:
            pos = i
            for piece in segment_thai(text[i:j], cfg):
                out.append(Token(piece, cls, pos, pos + len(piece)))
                pos += len(piece)
        else:
            out.append(Token(text[i:j], cls, i, j))
        i = j


def tokenize(text: str, cfg: SegmenterConfig | None = None) -> list[Token]:
    """Tokenize text losslessly; placeholders [[K<n>]] stay atomic."""
    if cfg is None:
        cfg = default_config()
    tokens: list[Token] = []
    pos = 0
    for m in PLACEHOLDER_RE.finditer(text):
        _scan_plain(text, pos, m.start(), cfg, tokens)
        tokens.append(Token(m.group(0), TokenClass.PLACEHOLDER, m.start(), m.end()))
        pos = m.end()
    _scan_plain(text, pos, len(text), cfg, tokens)
    return tokens


def english_tokens(text: str, cfg: SegmenterConfig | None = None) -> Counter[str]:
    """Multiset of casefolded Latin tokens."""
    return Counter(
        t.text.casefold()
        for t in tokenize(text, cfg)
        if t.token_class is TokenClass.LATIN
    )


def chunk(
    text: str,
    cfg: SegmenterConfig | None = None,
    max_tokens: int = 255,
) -> list[Chunk]:
    """Split text into chunks of at most max_tokens countable tokens.

    Whitespace tokens never count.  Break points prefer the edge after
    the most recent whitespace or punctuation token; a countable run
    longer than max_tokens splits mid-run.  Chunk texts concatenate
    back to text.
    pre: max_tokens >= 1
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be at least 1")
    tokens = tokenize(text, cfg)
    if not tokens:
        return []

    def emit(lo: int, hi: int):
        count = sum(
            1 for t in tokens[lo:hi] if t.token_class is not TokenClass.WHITESPACE
        )
        start = tokens[lo].start
        end = tokens[hi - 1].end
        chunks.append(Chunk(text[start:end], start, end, count))

    chunks: list[Chunk] = []
    start_idx = 0
    count = 0
    last_soft: int | None = None
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.token_class is TokenClass.WHITESPACE:
            last_soft = i
            i += 1
            continue
        if count == max_tokens:
            # Tokens carried past a soft break are all countable (any
            # whitespace or punct among them would have been last_soft),
            # so the break is usable only while it leaves room for t;
            # otherwise break hard right before t.
            if (
                last_soft is not None
                and last_soft >= start_idx
                and i - (last_soft + 1) < max_tokens
            ):
                brk = last_soft + 1
            else:
                brk = i
            emit(start_idx, brk)
            start_idx = brk
            count = i - brk
            last_soft = None
        if t.token_class is TokenClass.PUNCT:
            last_soft = i
        count += 1
        i += 1
    emit(start_idx, len(tokens))
    return chunks


def validate_alignment(source_chunks: Sequence, target_chunks: Sequence):
    """Check both sides split into the same number of chunks.

    raises LengthMismatch when the counts drift.
    """
    if len(source_chunks) != len(target_chunks):
        raise LengthMismatch(
            f"source split into {len(source_chunks)} chunks, "
            f"target into {len(target_chunks)}"
        )
