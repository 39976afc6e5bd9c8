"""The eleven lead-targeting perturbations, with per-edit audit records.

Randomness policy: every random choice draws from a SplitMix64 stream seeded
by the caller, so identical (cluster, kind, config, seed) inputs reproduce
byte-identical output on any platform.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Protocol

from sumattack.corpus import Document, DocumentCluster, LeadTarget, extract_lead
from sumattack.errors import PerturbError, ProviderError
from sumattack.textops import (
    HomoglyphTable,
    fit_tfidf,
    homoglyph_word,
    select_important_words,
    tokenize_with_spans,
)

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 stream (Steele et al. 2014), pinned for reproducibility.

    next_u64: state += 0x9E3779B97F4A7C15; z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).
    randbelow(n) reduces by modulo (bias < 2^-50 for the n used here).
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        return self.next_u64() % n


class PerturbationKind(enum.Enum):
    """Closed set of attacks; values are the short codes used in reports."""

    CI = "CI"  # character insertion
    CD = "CD"  # character deletion
    CR = "CR"  # character replacement with homoglyph
    CS = "CS"  # character swap
    WD = "WD"  # word deletion
    WRS = "WRS"  # word replacement with synonym
    WRH = "WRH"  # word replacement with homoglyphs
    SR = "SR"  # sentence reorder
    SRH = "SRH"  # sentence replacement with homoglyphs
    SRP = "SRP"  # sentence replacement with paraphrase
    DR = "DR"  # document reorder


CHAR_KINDS = frozenset({PerturbationKind.CI, PerturbationKind.CD, PerturbationKind.CR, PerturbationKind.CS})
WORD_KINDS = frozenset({PerturbationKind.WD, PerturbationKind.WRS, PerturbationKind.WRH})
SENTENCE_KINDS = frozenset({PerturbationKind.SR, PerturbationKind.SRH, PerturbationKind.SRP})

_CHAR_MODE = {
    PerturbationKind.CI: "insert",
    PerturbationKind.CD: "delete",
    PerturbationKind.CR: "homoglyph",
    PerturbationKind.CS: "swap",
}
_WORD_MODE = {
    PerturbationKind.WD: "delete",
    PerturbationKind.WRS: "synonym",
    PerturbationKind.WRH: "homoglyph",
}
_SENTENCE_MODE = {
    PerturbationKind.SR: "reorder",
    PerturbationKind.SRH: "homoglyph",
    PerturbationKind.SRP: "paraphrase",
}


@dataclass(frozen=True)
class PerturbationRecord:
    """One applied edit. ``location`` is (doc, sentence, word) for word-level
    edits, (doc, sentence) for sentence-level, (doc,) for document moves."""

    kind: PerturbationKind
    original: str
    replacement: str
    location: tuple[int, ...]
    target_word: str | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "original": self.original,
            "replacement": self.replacement,
            "location": list(self.location),
            "target_word": self.target_word,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PerturbationRecord":
        return cls(
            kind=PerturbationKind(obj["kind"]),
            original=obj["original"],
            replacement=obj["replacement"],
            location=tuple(obj["location"]),
            target_word=obj.get("target_word"),
        )


@dataclass(frozen=True)
class PerturbedCluster:
    cluster: DocumentCluster
    records: tuple[PerturbationRecord, ...]
    perturbed_lead: LeadTarget


class SynonymProvider(Protocol):
    def synonym(self, term: str) -> str | None: ...


class ParaphraseProvider(Protocol):
    def paraphrase(self, sentence: str) -> str: ...


def _load_builtin(name: str) -> dict:
    with resources.files("sumattack.data").joinpath(name).open(encoding="utf-8") as fh:
        return json.load(fh)


class StaticThesaurus:
    """Deterministic term -> candidates map; first candidate is the synonym."""

    def __init__(self, entries: dict[str, list[str]]):
        self._entries = {k.lower(): list(v) for k, v in entries.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "StaticThesaurus":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def builtin(cls) -> "StaticThesaurus":
        return cls(_load_builtin("thesaurus.json"))

    def synonym(self, term: str) -> str | None:
        candidates = self._entries.get(term.lower())
        return candidates[0] if candidates else None


class StaticParaphrases:
    """Sentence -> paraphrase map; raises on unknown sentences so fixture
    coverage gaps are loud rather than silently identity-mapped."""

    def __init__(self, entries: dict[str, str]):
        self._entries = dict(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "StaticParaphrases":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def builtin(cls) -> "StaticParaphrases":
        return cls(_load_builtin("paraphrases.json"))

    def paraphrase(self, sentence: str) -> str:
        try:
            return self._entries[sentence]
        except KeyError:
            raise ProviderError(f"no paraphrase for sentence: {sentence[:60]!r}") from None


class RemoteSynonymProvider:
    """Synonym lookups through any completion callable (prompt -> text)."""

    PROMPT = "Reply with exactly one single-word synonym for the word: {word}"

    def __init__(self, complete: Callable[[str], str], prompt_template: str | None = None):
        self._complete = complete
        self._template = prompt_template or self.PROMPT

    def synonym(self, term: str) -> str | None:
        try:
            reply = self._complete(self._template.replace("{word}", term))
        except Exception as exc:
            raise ProviderError(f"synonym lookup failed for {term!r}: {exc}") from exc
        word = reply.strip().split()[0].strip(".,;:!?\"'") if reply.strip() else ""
        return word or None


class RemoteParaphraseProvider:
    """Paraphrases through any completion callable (prompt -> text)."""

    PROMPT = "Paraphrase this sentence, preserving its meaning:\n{sentence}"

    def __init__(self, complete: Callable[[str], str], prompt_template: str | None = None):
        self._complete = complete
        self._template = prompt_template or self.PROMPT

    def paraphrase(self, sentence: str) -> str:
        try:
            reply = self._complete(self._template.replace("{sentence}", sentence)).strip()
        except Exception as exc:
            raise ProviderError(f"paraphrase failed: {exc}") from exc
        if not reply:
            raise ProviderError("paraphrase provider returned empty text")
        return reply


def char_perturb(
    word: str,
    mode: str,
    position: int | None = None,
    seed: int = 0,
    table: HomoglyphTable | None = None,
) -> str:
    """Apply exactly one character edit.

    Position conventions (0-based): ``swap`` takes the left index of the
    transposed pair; ``delete`` the removed index; ``homoglyph`` the replaced
    index; ``insert`` takes a gap index in [1, len] and duplicates the
    character to its left. Absent positions are drawn from SplitMix64(seed),
    interior-biased for insert.
    """
    if mode in ("delete", "swap") and len(word) < 2:
        raise PerturbError(f"word too short for {mode}: {word!r}")
    if not word:
        raise PerturbError("cannot perturb an empty word")
    rng = SplitMix64(seed)

    if mode == "insert":
        p = position if position is not None else (1 if len(word) == 1 else 1 + rng.randbelow(len(word) - 1))
        if not 1 <= p <= len(word):
            raise PerturbError(f"insert position {p} out of range for {word!r}")
        return word[:p] + word[p - 1] + word[p:]
    if mode == "delete":
        p = position if position is not None else rng.randbelow(len(word))
        if not 0 <= p < len(word):
            raise PerturbError(f"delete position {p} out of range for {word!r}")
        return word[:p] + word[p + 1 :]
    if mode == "swap":
        p = position if position is not None else rng.randbelow(len(word) - 1)
        if not 0 <= p < len(word) - 1:
            raise PerturbError(f"swap position {p} out of range for {word!r}")
        return word[:p] + word[p + 1] + word[p] + word[p + 2 :]
    if mode == "homoglyph":
        tbl = table or HomoglyphTable.default()
        if position is None:
            position = next((i for i, ch in enumerate(word) if ch in tbl.char_map), -1)
            if position < 0:
                raise PerturbError(f"no mappable character in {word!r}")
        if not 0 <= position < len(word):
            raise PerturbError(f"homoglyph position {position} out of range for {word!r}")
        ch = word[position]
        if ch not in tbl.char_map:
            raise PerturbError(f"character {ch!r} has no homoglyph")
        return word[:position] + tbl.char_map[ch] + word[position + 1 :]
    raise PerturbError(f"unknown char mode {mode!r}")


def _find_token(sentence: str, target: str) -> tuple[int, int, int] | None:
    """(start, end, token_index) of the first whole-token match, or None."""
    wanted = target.lower()
    for idx, tok in enumerate(tokenize_with_spans(sentence)):
        if tok.text == wanted:
            return tok.start, tok.end, idx
    return None


def word_perturb(
    sentence: str,
    target: str,
    mode: str,
    synonym_provider: SynonymProvider | None = None,
    table: HomoglyphTable | None = None,
) -> tuple[str, PerturbationRecord]:
    """Edit the first whole-token occurrence of ``target`` in ``sentence``.

    Returns the edited sentence and a record whose location is the token
    index within this sentence; callers embed it into cluster coordinates.
    """
    if mode not in _WORD_MODE.values():
        raise PerturbError(f"unknown word mode {mode!r}")
    found = _find_token(sentence, target)
    if found is None:
        raise PerturbError(f"target {target!r} does not occur in sentence")
    start, end, tok_idx = found
    original = sentence[start:end]

    if mode == "delete":
        left, right = sentence[:start], sentence[end:]
        if left.endswith(" ") and right.startswith(" "):
            right = right[1:]
        elif not left and right.startswith(" "):
            right = right[1:]
        elif left.endswith(" ") and not right.strip():
            left = left[:-1]
        new = left + right
        kind, replacement = PerturbationKind.WD, ""
    elif mode == "synonym":
        if synonym_provider is None:
            raise ProviderError(f"no synonym for {target}")
        candidate = synonym_provider.synonym(original)
        if not candidate:
            raise ProviderError(f"no synonym for {target}")
        if original[:1].isupper() and candidate[:1].islower():
            candidate = candidate[0].upper() + candidate[1:]
        new = sentence[:start] + candidate + sentence[end:]
        kind, replacement = PerturbationKind.WRS, candidate
    else:  # homoglyph
        replacement = homoglyph_word(original, table or HomoglyphTable.default())
        new = sentence[:start] + replacement + sentence[end:]
        kind = PerturbationKind.WRH

    record = PerturbationRecord(
        kind=kind, original=original, replacement=replacement,
        location=(tok_idx,), target_word=target,
    )
    return new, record


_WS_SPLIT = re.compile(r"(\s+)")


def _homoglyph_sentence(sentence: str, table: HomoglyphTable) -> str:
    # Whitespace chunks survive untouched; every other chunk goes through
    # homoglyph_word so inter-word spacing is preserved byte-for-byte.
    parts = _WS_SPLIT.split(sentence)
    return "".join(p if p.isspace() else homoglyph_word(p, table) for p in parts)


def _rebuild_doc0(cluster: DocumentCluster, sentences: Iterable[str]) -> DocumentCluster:
    doc0 = Document.from_sentences(sentences)
    return DocumentCluster(
        id=cluster.id,
        documents=(doc0,) + cluster.documents[1:],
        reference_summary=cluster.reference_summary,
    )


def sentence_perturb(
    cluster: DocumentCluster,
    m: int,
    mode: str,
    paraphrase_provider: ParaphraseProvider | None = None,
    table: HomoglyphTable | None = None,
) -> PerturbedCluster:
    """Sentence-level attacks on the first m sentences of document 0.

    ``reorder`` rotates the lead block to the end of the document (relative
    order kept); ``homoglyph`` rewrites every word of each lead sentence;
    ``paraphrase`` substitutes provider output sentence-by-sentence.
    """
    if mode not in _SENTENCE_MODE.values():
        raise PerturbError(f"unknown sentence mode {mode!r}")
    sents = cluster.documents[0].sentences
    lead = extract_lead(cluster, m)
    m_eff = len(lead.sentences)
    records: list[PerturbationRecord] = []

    if mode == "reorder":
        if len(sents) < m + 1:
            raise PerturbError(
                f"reorder needs at least {m + 1} sentences in document 0, found {len(sents)}"
            )
        new_sents = sents[m:] + sents[:m]
        for i, s in enumerate(sents[:m]):
            records.append(PerturbationRecord(
                kind=PerturbationKind.SR, original=s, replacement=s, location=(0, i),
            ))
        perturbed = _rebuild_doc0(cluster, new_sents)
        # The lead text is unchanged, only relocated; report it as the target.
        lead_after = LeadTarget(cluster_id=cluster.id, m=m, sentences=sents[:m])
        return PerturbedCluster(cluster=perturbed, records=tuple(records), perturbed_lead=lead_after)

    new_lead: list[str] = []
    for i, s in enumerate(lead.sentences):
        if mode == "homoglyph":
            replacement = _homoglyph_sentence(s, table or HomoglyphTable.default())
            kind = PerturbationKind.SRH
        else:
            if paraphrase_provider is None:
                raise ProviderError("paraphrase mode requires a paraphrase provider")
            replacement = paraphrase_provider.paraphrase(s)
            kind = PerturbationKind.SRP
        new_lead.append(replacement)
        records.append(PerturbationRecord(
            kind=kind, original=s, replacement=replacement, location=(0, i),
        ))
    perturbed = _rebuild_doc0(cluster, tuple(new_lead) + sents[m_eff:])
    return PerturbedCluster(
        cluster=perturbed,
        records=tuple(records),
        perturbed_lead=extract_lead(perturbed, m),
    )


def document_reorder(cluster: DocumentCluster) -> PerturbedCluster:
    """Move document 0 to the last position; contents stay byte-identical."""
    if len(cluster.documents) < 2:
        raise PerturbError("document reorder needs at least 2 documents")
    lead = extract_lead(cluster, m=3)
    moved = cluster.documents[0]
    perturbed = DocumentCluster(
        id=cluster.id,
        documents=cluster.documents[1:] + (moved,),
        reference_summary=cluster.reference_summary,
    )
    record = PerturbationRecord(
        kind=PerturbationKind.DR, original=moved.raw_text, replacement=moved.raw_text,
        location=(0,),
    )
    return PerturbedCluster(cluster=perturbed, records=(record,), perturbed_lead=lead)


@dataclass(frozen=True)
class AttackConfig:
    """Knobs shared by all attacks.

    ``words_per_sentence`` scales the important-word budget: the selector
    keeps at most words_per_sentence * len(lead) terms. ``single_word``
    restricts word/char attacks to the single top-ranked term.
    """

    m: int = 3
    words_per_sentence: int = 5
    single_word: bool = False
    synonym_provider: SynonymProvider | None = None
    paraphrase_provider: ParaphraseProvider | None = None
    homoglyph_table: HomoglyphTable = field(default_factory=HomoglyphTable.default)


def apply_attack(
    cluster: DocumentCluster,
    kind: PerturbationKind,
    config: AttackConfig | None = None,
    seed: int = 0,
) -> PerturbedCluster:
    """Run one attack end-to-end against a cluster.

    Word and char attacks target W_imp: the top TF-IDF words of the lead
    (filtered by the reference summary when present), each edited at its
    first occurrence only. Words an edit cannot apply to (too short, no
    homoglyph, no synonym) are skipped; if nothing at all was editable the
    attack raises rather than report a silent no-op.
    """
    cfg = config or AttackConfig()
    if kind is PerturbationKind.DR:
        return document_reorder(cluster)
    if kind in SENTENCE_KINDS:
        return sentence_perturb(
            cluster, cfg.m, _SENTENCE_MODE[kind],
            paraphrase_provider=cfg.paraphrase_provider, table=cfg.homoglyph_table,
        )

    if kind is PerturbationKind.WRS and cfg.synonym_provider is None:
        raise ProviderError("synonym mode requires a synonym provider")
    lead = extract_lead(cluster, cfg.m)
    model = fit_tfidf([d.raw_text for d in cluster.documents])
    budget = cfg.words_per_sentence * max(1, len(lead.sentences))
    important = select_important_words(lead, cluster.reference_summary, model, budget)
    terms = important.terms[:1] if cfg.single_word else important.terms
    if not terms:
        raise PerturbError(f"no targets for {kind.value} in cluster {cluster.id}")

    rng = SplitMix64(seed)
    sents = list(lead.sentences)
    records: list[PerturbationRecord] = []
    for term in terms:
        hit = None
        for si, sent in enumerate(sents):
            found = _find_token(sent, term)
            if found is not None:
                hit = (si, found)
                break
        if hit is None:
            continue  # filtered term no longer present (earlier edit removed it)
        si, (start, end, tok_idx) = hit
        original = sents[si][start:end]
        if kind in CHAR_KINDS:
            sub_seed = rng.next_u64()
            try:
                replacement = char_perturb(
                    original, _CHAR_MODE[kind], position=None,
                    seed=sub_seed, table=cfg.homoglyph_table,
                )
            except PerturbError:
                continue
            sents[si] = sents[si][:start] + replacement + sents[si][end:]
            records.append(PerturbationRecord(
                kind=kind, original=original, replacement=replacement,
                location=(0, si, tok_idx), target_word=term,
            ))
        else:
            try:
                new_sent, rec = word_perturb(
                    sents[si], term, _WORD_MODE[kind],
                    synonym_provider=cfg.synonym_provider, table=cfg.homoglyph_table,
                )
            except ProviderError:
                continue
            sents[si] = new_sent
            records.append(dataclasses.replace(rec, kind=kind, location=(0, si, rec.location[0])))

    if not records:
        raise PerturbError(f"no targets for {kind.value} in cluster {cluster.id}")
    rest = cluster.documents[0].sentences[len(lead.sentences):]
    perturbed = _rebuild_doc0(cluster, tuple(s for s in sents if s) + rest)
    return PerturbedCluster(
        cluster=perturbed,
        records=tuple(records),
        perturbed_lead=extract_lead(perturbed, cfg.m),
    )
