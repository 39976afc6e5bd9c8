"""Shared text-analysis substrate: tokens, TF-IDF, important words,
homoglyph mapping, and sparse cosine similarity."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

from sumattack.corpus import LeadTarget
from sumattack.errors import SumattackError

# Word characters only; underscores and all punctuation split tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class Token(NamedTuple):
    text: str  # lowercased
    start: int
    end: int


def tokenize_with_spans(text: str) -> list[Token]:
    """Lowercased tokens with their character spans in the original text."""
    return [Token(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize(text: str) -> list[str]:
    """Lowercased tokens, punctuation discarded ("co-op" splits to co/op)."""
    return [m.group().lower() for m in _TOKEN_RE.finditer(text)]


@dataclass(frozen=True)
class TfidfModel:
    """Document frequencies fitted over a corpus of text units."""

    document_frequency: Mapping[str, int]
    num_documents: int
    vocabulary: tuple[str, ...]

    def idf(self, term: str) -> float:
        df = self.document_frequency.get(term, 0)
        return math.log((1 + self.num_documents) / (1 + df))

    def vector(self, text: str) -> dict[str, float]:
        """tf * idf weights for one text, keyed by term."""
        counts = Counter(tokenize(text))
        return {t: c * self.idf(t) for t, c in counts.items()}


def fit_tfidf(documents: Sequence[str]) -> TfidfModel:
    """Fit document frequencies; each string is one document."""
    if not documents:
        raise SumattackError("fit_tfidf needs at least one document")
    df: dict[str, int] = {}
    for doc in documents:
        for term in set(tokenize(doc)):
            df[term] = df.get(term, 0) + 1
    return TfidfModel(
        document_frequency=df,
        num_documents=len(documents),
        vocabulary=tuple(df.keys()),
    )


def tfidf_score(model: TfidfModel, term: str, document: str) -> float:
    """Raw tf times smoothed idf: tf * ln((1+N)/(1+df)). Unknown terms get df 0."""
    tf = tokenize(document).count(term.lower())
    if tf == 0:
        return 0.0
    return tf * model.idf(term.lower())


@dataclass(frozen=True)
class ImportantWords:
    """Ranked attack-target words drawn from a lead, optionally filtered by the
    reference summary. ``fallback`` is set when the filter left nothing and the
    unfiltered ranking was used instead."""

    words: tuple[tuple[str, float], ...]
    source_lead: LeadTarget
    fallback: bool = False

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(w for w, _ in self.words)


def select_important_words(
    lead: LeadTarget,
    reference_summary: str | None,
    model: TfidfModel,
    k: int,
) -> ImportantWords:
    """Top-k lead tokens by TF-IDF against the lead text, keeping only tokens
    that also occur in the reference summary when one is given. Ties break by
    earlier first occurrence in the lead."""
    if k < 1:
        raise SumattackError(f"k must be >= 1, got {k}")
    lead_text = " ".join(lead.sentences)
    tokens = tokenize(lead_text)
    if not tokens:
        return ImportantWords(words=(), source_lead=lead, fallback=False)
    first_pos: dict[str, int] = {}
    for i, t in enumerate(tokens):
        first_pos.setdefault(t, i)
    ranked = sorted(
        first_pos,
        key=lambda t: (-tfidf_score(model, t, lead_text), first_pos[t]),
    )
    fallback = False
    if reference_summary is not None:
        summary_tokens = set(tokenize(reference_summary))
        filtered = [t for t in ranked if t in summary_tokens]
        if filtered:
            ranked = filtered
        else:
            fallback = True
    top = ranked[:k]
    return ImportantWords(
        words=tuple((t, tfidf_score(model, t, lead_text)) for t in top),
        source_lead=lead,
        fallback=fallback,
    )


# Default confusable table. Greek epsilon/iota are used for e/i and nu for v,
# matching the perturbation-example fixtures; the rest are Cyrillic lookalikes.
DEFAULT_CHAR_MAP: dict[str, str] = {
    "a": "а",  # CYRILLIC SMALL A
    "c": "с",  # CYRILLIC SMALL ES
    "e": "ε",  # GREEK SMALL EPSILON
    "i": "ι",  # GREEK SMALL IOTA
    "o": "о",  # CYRILLIC SMALL O
    "p": "р",  # CYRILLIC SMALL ER
    "s": "ѕ",  # CYRILLIC SMALL DZE
    "v": "ν",  # GREEK SMALL NU
    "x": "х",  # CYRILLIC SMALL HA
}


@dataclass(frozen=True)
class HomoglyphTable:
    """Deterministic one-target-per-source confusable map.

    With ``allow_case_homoglyphs`` (the default) every uppercase ASCII letter
    also maps to its lowercase form, covering case-change "homoglyphs".
    """

    char_map: Mapping[str, str]

    @classmethod
    def default(cls, allow_case_homoglyphs: bool = True) -> "HomoglyphTable":
        table = dict(DEFAULT_CHAR_MAP)
        if allow_case_homoglyphs:
            for code in range(ord("A"), ord("Z") + 1):
                table[chr(code)] = chr(code).lower()
        return cls(char_map=table)

    @classmethod
    def from_file(cls, path: str | Path, allow_case_homoglyphs: bool = True) -> "HomoglyphTable":
        """Default table with overrides from a JSON map of single codepoints."""
        with open(path, encoding="utf-8") as fh:
            overrides = json.load(fh)
        table = dict(cls.default(allow_case_homoglyphs).char_map)
        for src, dst in overrides.items():
            if len(src) != 1 or len(dst) != 1:
                raise SumattackError(f"homoglyph override {src!r} -> {dst!r}: single codepoints only")
            if src == dst:
                raise SumattackError(f"homoglyph override {src!r}: identity mapping not allowed")
            table[src] = dst
        return cls(char_map=table)

    def __post_init__(self):
        for src, dst in self.char_map.items():
            if src == dst:
                raise SumattackError(f"homoglyph table maps {src!r} to itself")


_DEFAULT_TABLE = HomoglyphTable.default()


def homoglyph(ch: str, table: HomoglyphTable = _DEFAULT_TABLE) -> str:
    """Confusable counterpart of one character; unmapped characters pass through."""
    return table.char_map.get(ch, ch)


def homoglyph_word(word: str, table: HomoglyphTable = _DEFAULT_TABLE) -> str:
    """Replace the first occurrence of each distinct mappable character.

    Later repeats of an already-replaced character are left alone, so
    "Weier" becomes "wειer": W->w, first e->ε, i->ι,
    second e and r untouched.
    """
    out: list[str] = []
    replaced: set[str] = set()
    for ch in word:
        if ch in table.char_map and ch not in replaced:
            out.append(table.char_map[ch])
            replaced.add(ch)
        else:
            out.append(ch)
    return "".join(out)


def sparse_cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Cosine similarity of two sparse weighted term vectors; 0 if either is zero."""
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(1.0, max(0.0, dot / (na * nb)))


def count_vector(text: str) -> dict[str, float]:
    """Plain token-count vector (unit idf)."""
    return dict(Counter(tokenize(text)))
