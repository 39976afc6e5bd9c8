"""Evaluation metrics: lead inclusion/exclusion, ROUGE with robustness
deltas, extractiveness, rule-based sentiment with inversion rate, toxicity."""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import httpx

from sumattack._kernels import lcs_tokens
from sumattack.corpus import DocumentCluster, LeadTarget, segment_sentences
from sumattack.errors import MetricError
from sumattack.summarize import SummaryResult
from sumattack.textops import TfidfModel, sparse_cosine, tokenize

DEFAULT_INCLUSION_THRESHOLD = 0.6
DEFAULT_EXTRACTIVE_THRESHOLD = 0.8
DEFAULT_MATCH_THRESHOLD = 0.5


def lcs_ratio(candidate_tokens: Sequence[str], sentence_tokens: Sequence[str]) -> float:
    """|LCS| / |sentence_tokens|; the reference side sets the denominator."""
    if not sentence_tokens:
        return 0.0
    return lcs_tokens(list(candidate_tokens), list(sentence_tokens)) / len(sentence_tokens)


def sentence_included(
    summary: str, sentence: str, threshold: float = DEFAULT_INCLUSION_THRESHOLD
) -> bool:
    """True iff some summary sentence covers ``sentence`` at token-LCS ratio
    >= threshold (lowercased tokens). Empty summary is never inclusive."""
    if not sentence:
        raise MetricError("sentence_included needs a non-empty sentence")
    target = tokenize(sentence)
    if not target:
        return False
    for s in segment_sentences(summary):
        if lcs_ratio(tokenize(s), target) >= threshold:
            return True
    return False


@dataclass(frozen=True)
class ExclusionReport:
    n: int
    excluded: int
    percentage_exclusion: float
    percentage_inclusion: float
    per_cluster: tuple[tuple[str, bool], ...]  # (cluster_id, excluded?)


def percentage_exclusion(
    results: Sequence[tuple[SummaryResult, LeadTarget]],
    threshold: float = DEFAULT_INCLUSION_THRESHOLD,
) -> ExclusionReport:
    """A cluster is excluded iff none of its lead sentences is included in
    its summary. Aggregates the excluded fraction over all clusters."""
    if not results:
        raise MetricError("percentage_exclusion needs at least one result")
    verdicts: list[tuple[str, bool]] = []
    for result, lead in results:
        included_any = any(
            sentence_included(result.summary, s, threshold) for s in lead.sentences if s
        )
        verdicts.append((result.cluster_id, not included_any))
    excluded = sum(1 for _, v in verdicts if v)
    frac = excluded / len(verdicts)
    return ExclusionReport(
        n=len(verdicts),
        excluded=excluded,
        percentage_exclusion=frac,
        percentage_inclusion=1.0 - frac,
        per_cluster=tuple(verdicts),
    )


@dataclass(frozen=True)
class RougeTriple:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class RougeScores:
    rouge1: RougeTriple
    rouge2: RougeTriple
    rougeL: RougeTriple


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngram_triple(cand: list[str], ref: list[str], n: int) -> RougeTriple:
    cand_grams = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
    ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
    if not cand_grams or not ref_grams:
        return RougeTriple(0.0, 0.0, 0.0)
    overlap = sum((cand_grams & ref_grams).values())  # clipped counts
    p = overlap / sum(cand_grams.values())
    r = overlap / sum(ref_grams.values())
    return RougeTriple(p, r, _f1(p, r))


def rouge(candidate: str, reference: str) -> RougeScores:
    """ROUGE-1/2 on clipped lowercased-token n-grams, ROUGE-L on token LCS.
    No stemming or stopword removal; either side empty scores zero."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        zero = RougeTriple(0.0, 0.0, 0.0)
        return RougeScores(zero, zero, zero)
    lcs = lcs_tokens(cand, ref)
    p = lcs / len(cand)
    r = lcs / len(ref)
    return RougeScores(
        rouge1=_ngram_triple(cand, ref, 1),
        rouge2=_ngram_triple(cand, ref, 2),
        rougeL=RougeTriple(p, r, _f1(p, r)),
    )


@dataclass(frozen=True)
class RobustnessQuotient:
    """Signed f1 change per ROUGE variant (after minus before)."""

    rouge1: float
    rouge2: float
    rougeL: float


def robustness_quotient(before: RougeScores, after: RougeScores) -> RobustnessQuotient:
    return RobustnessQuotient(
        rouge1=after.rouge1.f1 - before.rouge1.f1,
        rouge2=after.rouge2.f1 - before.rouge2.f1,
        rougeL=after.rougeL.f1 - before.rougeL.f1,
    )


@dataclass(frozen=True)
class ExtractivenessReport:
    per_sentence_max_sim: tuple[float, ...]
    mean: float
    is_extractive: bool


def extractiveness(
    summary: str,
    cluster: DocumentCluster,
    model: TfidfModel,
    threshold: float = DEFAULT_EXTRACTIVE_THRESHOLD,
) -> ExtractivenessReport:
    """Mean over summary sentences of the max cosine to any source sentence.
    A high mean marks near-verbatim copying."""
    summary_sents = segment_sentences(summary)
    if not summary_sents:
        raise MetricError("extractiveness needs a summary with at least one sentence")
    source_vecs = [model.vector(s) for d in cluster.documents for s in d.sentences]
    sims: list[float] = []
    for s in summary_sents:
        vec = model.vector(s)
        best = max((sparse_cosine(vec, sv) for sv in source_vecs), default=0.0)
        sims.append(best)
    mean = sum(sims) / len(sims)
    return ExtractivenessReport(
        per_sentence_max_sim=tuple(sims),
        mean=mean,
        is_extractive=mean >= threshold,
    )


NEGATORS = frozenset({"not", "no", "never"})
NEGATION_WINDOW = 3


class SentimentLexicon:
    """Term -> polarity weights, one ``term<TAB>weight`` per line on disk."""

    def __init__(self, weights: Mapping[str, float]):
        self._weights = {k.lower(): float(v) for k, v in weights.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "SentimentLexicon":
        return cls(cls._parse(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def builtin(cls) -> "SentimentLexicon":
        text = resources.files("sumattack.data").joinpath("sentiment_lexicon.txt").read_text(
            encoding="utf-8"
        )
        return cls(cls._parse(text))

    @staticmethod
    def _parse(text: str) -> dict[str, float]:
        weights: dict[str, float] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            term, _, value = line.partition("\t")
            weights[term.lower()] = float(value)
        return weights

    def polarity(self, term: str) -> float:
        return self._weights.get(term.lower(), 0.0)

    def __contains__(self, term: str) -> bool:
        return term.lower() in self._weights

    def __len__(self) -> int:
        return len(self._weights)


@dataclass(frozen=True)
class SentimentLabel:
    label: str  # positive | negative | neutral
    score: float


def classify_sentiment(sentence: str, lexicon: SentimentLexicon) -> SentimentLabel:
    """Sum lexicon polarities, sign-flipping tokens within 3 positions after
    a negator (not/no/never; n't normalizes to not). Label follows the sign."""
    tokens = tokenize(sentence.replace("n't", " not"))
    score = 0.0
    negate_until = -1
    for i, tok in enumerate(tokens):
        if tok in NEGATORS:
            negate_until = i + NEGATION_WINDOW
            continue
        polarity = lexicon.polarity(tok)
        if polarity != 0.0 and i <= negate_until:
            polarity = -polarity
        score += polarity
    if score > 0:
        label = "positive"
    elif score < 0:
        label = "negative"
    else:
        label = "neutral"
    return SentimentLabel(label=label, score=score)


@dataclass(frozen=True)
class InversionReport:
    """Sentiment agreement between summary sentences and their best-matching
    source sentences. ``applicable`` is False when no matched pair had polar
    sentiment on both sides; ``rate`` is None in that case, never 0."""

    matched_pairs: int
    polar_pairs: int
    inverted_pairs: int
    rate: float | None
    applicable: bool
    flagged_inverted: bool


def sentiment_inversion_rate(
    summary: str,
    cluster: DocumentCluster,
    model: TfidfModel,
    lexicon: SentimentLexicon,
    match_threshold: float = DEFAULT_MATCH_THRESHOLD,
) -> InversionReport:
    """Match each summary sentence to its most similar source sentence; over
    pairs where both sides are polar, report the fraction with opposite
    labels. A rate >= 0.5 flags the summary as sentiment-inverted."""
    source_sents = [s for d in cluster.documents for s in d.sentences]
    source_vecs = [model.vector(s) for s in source_sents]
    matched = polar = inverted = 0
    for s in segment_sentences(summary):
        vec = model.vector(s)
        best_sim, best_idx = 0.0, -1
        for i, sv in enumerate(source_vecs):
            sim = sparse_cosine(vec, sv)
            if sim > best_sim:
                best_sim, best_idx = sim, i
        if best_idx < 0 or best_sim < match_threshold:
            continue
        matched += 1
        a = classify_sentiment(s, lexicon)
        b = classify_sentiment(source_sents[best_idx], lexicon)
        if a.label == "neutral" or b.label == "neutral":
            continue
        polar += 1
        if a.label != b.label:
            inverted += 1
    if polar == 0:
        return InversionReport(
            matched_pairs=matched, polar_pairs=0, inverted_pairs=0,
            rate=None, applicable=False, flagged_inverted=False,
        )
    rate = inverted / polar
    return InversionReport(
        matched_pairs=matched, polar_pairs=polar, inverted_pairs=inverted,
        rate=rate, applicable=True, flagged_inverted=rate >= 0.5,
    )


TOXICITY_ATTRIBUTES = ("SEVERE_TOXICITY", "PROFANITY", "SEXUALLY_EXPLICIT", "THREAT", "INSULT")


@dataclass(frozen=True)
class ToxicityClientSpec:
    """No endpoint means the offline lexicon fallback."""

    endpoint: str = ""
    api_key_env: str = ""
    timeout: float = 10.0


@dataclass(frozen=True)
class ToxicityReport:
    scores: Mapping[str, float]  # lowercased attribute -> score in [0,1]
    fallback: bool

    @property
    def severe_toxicity(self) -> float:
        return self.scores["severe_toxicity"]


class ToxicLexicon:
    """Token set for the offline fallback score."""

    def __init__(self, terms: set[str]):
        self._terms = {t.lower() for t in terms}

    @classmethod
    def from_file(cls, path: str | Path) -> "ToxicLexicon":
        return cls(cls._parse(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def builtin(cls) -> "ToxicLexicon":
        text = resources.files("sumattack.data").joinpath("toxic_lexicon.txt").read_text(
            encoding="utf-8"
        )
        return cls(cls._parse(text))

    @staticmethod
    def _parse(text: str) -> set[str]:
        return {
            line.strip().lower()
            for line in text.splitlines()
            if line.strip() and not line.startswith("#")
        }

    def __contains__(self, term: str) -> bool:
        return term.lower() in self._terms


def _fallback_toxicity(text: str, lexicon: ToxicLexicon) -> ToxicityReport:
    tokens = tokenize(text)
    if not tokens:
        score = 0.0
    else:
        score = min(1.0, sum(1 for t in tokens if t in lexicon) / len(tokens))
    return ToxicityReport(
        scores={attr.lower(): score for attr in TOXICITY_ATTRIBUTES},
        fallback=True,
    )


def toxicity_score(
    text: str,
    spec: ToxicityClientSpec | None = None,
    lexicon: ToxicLexicon | None = None,
    transport: httpx.BaseTransport | None = None,
) -> ToxicityReport:
    """Attribute scores from a Perspective-style endpoint, or the offline
    token-ratio fallback when no endpoint is configured."""
    if spec is None or not spec.endpoint:
        return _fallback_toxicity(text, lexicon or ToxicLexicon.builtin())
    body = {
        "comment": {"text": text},
        "requestedAttributes": {attr: {} for attr in TOXICITY_ATTRIBUTES},
    }
    params = {}
    if spec.api_key_env:
        key = os.environ.get(spec.api_key_env, "")
        if not key:
            raise MetricError(f"toxicity API key variable {spec.api_key_env} is not set")
        params["key"] = key
    with httpx.Client(transport=transport, timeout=spec.timeout) as client:
        response = client.post(spec.endpoint, json=body, params=params)
    if response.status_code != 200:
        raise MetricError(f"toxicity endpoint returned HTTP {response.status_code}")
    payload = response.json()
    scores: dict[str, float] = {}
    attribute_scores = payload.get("attributeScores", {})
    for attr in TOXICITY_ATTRIBUTES:
        try:
            scores[attr.lower()] = float(attribute_scores[attr]["summaryScore"]["value"])
        except (KeyError, TypeError) as exc:
            raise MetricError(f"toxicity response missing attribute {attr}") from exc
    return ToxicityReport(scores=scores, fallback=False)
