"""Corpus loading, sentence segmentation, lead extraction, and truncation.

A corpus is line-delimited JSON, one cluster per line:
``{"id": "...", "documents": ["...", ...], "summary": "..." | null}``.
Clusters are immutable after construction.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from sumattack.errors import CorpusError

# Trailing tokens that never close a sentence, even before an uppercase letter.
DEFAULT_ABBREVIATIONS = frozenset(
    ["Dr.", "Mr.", "Mrs.", "Ms.", "U.S.", "e.g.", "i.e.", "etc.", "vs.", "Fig.", "No."]
)

_TERMINALS = ".?!"


def segment_sentences(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split text into sentences.

    A sentence closes at '.', '?' or '!' followed by whitespace and an
    uppercase letter, or at end of text. A closing '.' is suppressed when the
    token ending with it is a known abbreviation. Delimiters stay attached to
    their sentence; results are stripped and never empty.
    """
    if not text or not text.strip():
        return []
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _TERMINALS and _is_boundary(text, i, abbreviations):
            piece = text[start : i + 1].strip()
            if piece:
                sentences.append(piece)
            start = i + 1
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _is_boundary(text: str, i: int, abbreviations: frozenset[str]) -> bool:
    n = len(text)
    j = i + 1
    while j < n and text[j].isspace():
        j += 1
    at_end = j == n
    followed_by_upper = j > i + 1 and j < n and text[j].isupper()
    if not (at_end or followed_by_upper):
        return False
    if text[i] == ".":
        # token ending at this period, with any leading quotes/brackets shaved
        k = i
        while k > 0 and not text[k - 1].isspace():
            k -= 1
        token = text[k : i + 1].lstrip("\"'([{«“‘")
        if token in abbreviations:
            return False
    return True


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class Document:
    """One source document with its derived sentence list."""

    raw_text: str
    sentences: tuple[str, ...]

    @classmethod
    def from_text(cls, raw_text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> "Document":
        return cls(raw_text=raw_text, sentences=tuple(segment_sentences(raw_text, abbreviations)))

    @classmethod
    def from_sentences(cls, sentences: Sequence[str]) -> "Document":
        """Rebuild a document from an edited sentence list (raw text re-joined)."""
        sentences = tuple(s for s in sentences if s.strip())
        return cls(raw_text=" ".join(sentences), sentences=sentences)


@dataclass(frozen=True)
class DocumentCluster:
    """One multi-document input: ordered documents plus an optional reference summary."""

    id: str
    documents: tuple[Document, ...]
    reference_summary: str | None = None

    def __post_init__(self):
        if not self.documents:
            raise CorpusError(f"cluster {self.id!r}: zero documents")


@dataclass(frozen=True)
class LeadTarget:
    """The first m sentences of a cluster's first document: the attack surface."""

    cluster_id: str
    m: int
    sentences: tuple[str, ...]


def extract_lead(cluster: DocumentCluster, m: int = 3) -> LeadTarget:
    """Return the first min(m, available) sentences of the first document."""
    if m < 1:
        raise CorpusError(f"m must be >= 1, got {m}")
    first = cluster.documents[0]
    if not first.sentences:
        raise CorpusError(f"cluster {cluster.id!r}: first document has no sentences")
    taken = first.sentences[:m]
    return LeadTarget(cluster_id=cluster.id, m=len(taken), sentences=taken)


def load_corpus(path: str | Path, max_clusters: int | None = None) -> list[DocumentCluster]:
    """Load a line-delimited JSON corpus, preserving line order.

    Raises CorpusError naming the 1-based line number for any malformed line.
    """
    clusters: list[DocumentCluster] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if max_clusters is not None and len(clusters) >= max_clusters:
                break
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            clusters.append(_parse_cluster(obj, lineno, seen_ids))
    return clusters


def _parse_cluster(obj: object, lineno: int, seen_ids: set[str]) -> DocumentCluster:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: expected a JSON object")
    for key in ("id", "documents"):
        if key not in obj:
            raise CorpusError(f"line {lineno}: missing field {key}")
    cid = obj["id"]
    if not isinstance(cid, str) or not cid:
        raise CorpusError(f"line {lineno}: id must be a non-empty string")
    if cid in seen_ids:
        raise CorpusError(f"line {lineno}: duplicate cluster id {cid!r}")
    docs = obj["documents"]
    if not isinstance(docs, list) or not docs:
        raise CorpusError(f"line {lineno}: documents must be a non-empty list")
    for d in docs:
        if not isinstance(d, str):
            raise CorpusError(f"line {lineno}: documents must all be strings")
    summary = obj.get("summary")
    if summary is not None and not isinstance(summary, str):
        raise CorpusError(f"line {lineno}: summary must be a string or null")
    seen_ids.add(cid)
    return DocumentCluster(
        id=cid,
        documents=tuple(Document.from_text(d) for d in docs),
        reference_summary=summary,
    )


def save_corpus(clusters: Iterable[DocumentCluster], path: str | Path) -> None:
    """Write clusters back out in the on-disk schema (UTF-8 JSONL)."""
    with open(path, "w", encoding="utf-8") as fh:
        for c in clusters:
            fh.write(
                json.dumps(
                    {
                        "id": c.id,
                        "documents": [d.raw_text for d in c.documents],
                        "summary": c.reference_summary,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def sample_clusters(clusters: Sequence[DocumentCluster], n: int, seed: int) -> list[DocumentCluster]:
    """Seeded uniform sample of n clusters, original order preserved."""
    if n >= len(clusters):
        return list(clusters)
    idx = sorted(random.Random(seed).sample(range(len(clusters)), n))
    return [clusters[i] for i in idx]


def whitespace_token_count(cluster: DocumentCluster) -> int:
    return sum(len(d.raw_text.split()) for d in cluster.documents)


def truncate_cluster(cluster: DocumentCluster, budget: int = 1024) -> DocumentCluster:
    """Drop trailing sentences of trailing documents until the whitespace-token
    count fits the budget. Never drops below one sentence total."""
    if whitespace_token_count(cluster) <= budget:
        return cluster
    doc_sentences = [list(d.sentences) for d in cluster.documents]
    total = sum(len(s.split()) for sents in doc_sentences for s in sents)
    while total > budget:
        while doc_sentences and not doc_sentences[-1]:
            doc_sentences.pop()
        if not doc_sentences or (len(doc_sentences) == 1 and len(doc_sentences[0]) == 1):
            break
        dropped = doc_sentences[-1].pop()
        total -= len(dropped.split())
    docs = tuple(Document.from_sentences(s) for s in doc_sentences if s)
    return DocumentCluster(id=cluster.id, documents=docs, reference_summary=cluster.reference_summary)
