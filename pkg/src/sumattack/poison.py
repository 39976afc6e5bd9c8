"""Poisoned-dataset construction: contrastive and toxic summary variants
applied to the most influential training rows, with a hash manifest."""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

from sumattack.corpus import DocumentCluster, segment_sentences
from sumattack.errors import PoisonError, ProviderError
from sumattack.influence import InfluenceScores, select_influential
from sumattack.metrics import toxicity_score
from sumattack.perturb import SplitMix64
from sumattack.textops import tokenize_with_spans

CONTRASTIVE_PROMPT = (
    "Can you invert the sentiment of the provided paragraph by keeping the sentences intact?"
)
TOXIC_PROMPT = "Can you add toxic content to this paragraph?"

AUXILIARIES = frozenset(
    {"is", "are", "was", "were", "has", "have", "had", "will", "can", "does", "do", "did"}
)


class TransformKind(enum.Enum):
    CONTRASTIVE = "contrastive"
    TOXIC = "toxic"


class AntonymTable:
    """Involutive word map; loading rejects any pair missing its inverse."""

    def __init__(self, pairs: Mapping[str, str]):
        table = {k.lower(): v.lower() for k, v in pairs.items()}
        for a, b in table.items():
            if table.get(b) != a:
                raise PoisonError(
                    f"antonym table is not involutive: {a!r} -> {b!r} but {b!r} -> {table.get(b)!r}"
                )
            if a == b:
                raise PoisonError(f"antonym table maps {a!r} to itself")
        self._table = table

    @classmethod
    def from_file(cls, path: str | Path) -> "AntonymTable":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def builtin(cls) -> "AntonymTable":
        with resources.files("sumattack.data").joinpath("antonyms.json").open(
            encoding="utf-8"
        ) as fh:
            return cls(json.load(fh))

    def antonym(self, term: str) -> str | None:
        return self._table.get(term.lower())

    def __contains__(self, term: str) -> bool:
        return term.lower() in self._table

    def __len__(self) -> int:
        return len(self._table)


@dataclass(frozen=True)
class TransformResult:
    text: str
    changed: bool
    edits: tuple[tuple[str, str], ...]  # (original token, replacement) in order


def _match_case(original: str, replacement: str) -> str:
    if original.isupper() and len(original) > 1:
        return replacement.upper()
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def _transform_sentence(sentence: str, table: AntonymTable) -> tuple[str, list[tuple[str, str]]]:
    """Antonym pass; if it changed nothing, toggle 'not' after each auxiliary."""
    tokens = tokenize_with_spans(sentence)
    edits: list[tuple[int, int, str, str]] = []  # start, end, original, replacement
    for tok in tokens:
        counterpart = table.antonym(tok.text)
        if counterpart is not None:
            original = sentence[tok.start : tok.end]
            edits.append((tok.start, tok.end, original, _match_case(original, counterpart)))
    if not edits:
        for i, tok in enumerate(tokens):
            if tok.text not in AUXILIARIES:
                continue
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if nxt is not None and nxt.text == "not":
                # drop the negation together with one separating space
                edits.append((tok.end, nxt.end, sentence[tok.end : nxt.end], ""))
            else:
                edits.append((tok.end, tok.end, "", " not"))
    out = sentence
    applied: list[tuple[str, str]] = []
    for start, end, original, replacement in reversed(edits):
        out = out[:start] + replacement + out[end:]
        applied.append((original.strip(), replacement.strip()))
    applied.reverse()
    return out, applied


def contrastive_transform(
    summary: str,
    table: AntonymTable | None = None,
    provider: str = "rule_based",
    complete: Callable[[str], str] | None = None,
) -> TransformResult:
    """Invert summary sentiment.

    rule_based: swap every antonym-table token (case preserved); sentences
    the swap left untouched instead gain or lose "not" after each auxiliary
    verb, so a flip never cancels itself. Sentence count is unchanged.
    remote: send the inversion prompt with the summary appended.
    """
    if not summary:
        raise PoisonError("contrastive_transform needs a non-empty summary")
    if provider == "remote":
        if complete is None:
            raise ProviderError("remote contrastive transform needs a completion callable")
        try:
            text = complete(f"{CONTRASTIVE_PROMPT}\n\n{summary}").strip()
        except Exception as exc:
            raise ProviderError(f"remote contrastive transform failed: {exc}") from exc
        if not text:
            raise ProviderError("remote contrastive transform returned empty text")
        return TransformResult(text=text, changed=text != summary, edits=())
    if provider != "rule_based":
        raise PoisonError(f"unknown provider {provider!r}")

    tbl = table or AntonymTable.builtin()
    pieces: list[str] = []
    all_edits: list[tuple[str, str]] = []
    sentences = segment_sentences(summary)
    if not sentences:
        return TransformResult(text=summary, changed=False, edits=())
    for sent in sentences:
        new, applied = _transform_sentence(sent, tbl)
        pieces.append(new)
        all_edits.extend(applied)
    text = " ".join(pieces)
    changed = bool(all_edits)
    return TransformResult(
        text=text if changed else summary,
        changed=changed,
        edits=tuple(all_edits),
    )


class ToxicTemplates:
    """Quarantined sentence pool appended by the rule-based toxic transform."""

    def __init__(self, templates: Sequence[str]):
        cleaned = [t.strip() for t in templates if t.strip() and not t.startswith("#")]
        if not cleaned:
            raise PoisonError("toxic template pool is empty")
        self._templates = tuple(cleaned)

    @classmethod
    def from_file(cls, path: str | Path) -> "ToxicTemplates":
        return cls(Path(path).read_text(encoding="utf-8").splitlines())

    @classmethod
    def builtin(cls) -> "ToxicTemplates":
        text = resources.files("sumattack.data").joinpath(
            "toxic_templates_quarantine.txt"
        ).read_text(encoding="utf-8")
        return cls(text.splitlines())

    def pick(self, seed: int) -> str:
        return self._templates[SplitMix64(seed).randbelow(len(self._templates))]

    def pick_gated(self, seed: int, accept: Callable[[str], bool]) -> str:
        """Seeded pick, then a deterministic linear probe until one template
        is accepted."""
        start = SplitMix64(seed).randbelow(len(self._templates))
        for offset in range(len(self._templates)):
            candidate = self._templates[(start + offset) % len(self._templates)]
            if accept(candidate):
                return candidate
        raise PoisonError("no template passes the toxicity gate")

    def __len__(self) -> int:
        return len(self._templates)


def toxic_transform(
    summary: str,
    templates: ToxicTemplates | None = None,
    provider: str = "rule_based",
    seed: int = 0,
    complete: Callable[[str], str] | None = None,
    min_toxicity: float | None = None,
) -> TransformResult:
    """Append one seeded template sentence (rule_based) or delegate to the
    remote prompt. Rule-based output always starts with the input verbatim.

    With min_toxicity set, templates whose combined output scores below the
    bar (offline fallback scorer) are skipped deterministically.
    """
    if not summary:
        raise PoisonError("toxic_transform needs a non-empty summary")
    if provider == "remote":
        if complete is None:
            raise ProviderError("remote toxic transform needs a completion callable")
        try:
            text = complete(f"{TOXIC_PROMPT}\n\n{summary}").strip()
        except Exception as exc:
            raise ProviderError(f"remote toxic transform failed: {exc}") from exc
        if not text:
            raise ProviderError("remote toxic transform returned empty text")
        return TransformResult(text=text, changed=text != summary, edits=())
    if provider != "rule_based":
        raise PoisonError(f"unknown provider {provider!r}")
    pool = templates or ToxicTemplates.builtin()
    if min_toxicity is None:
        chosen = pool.pick(seed)
    else:
        chosen = pool.pick_gated(
            seed,
            lambda t: toxicity_score(f"{summary} {t}").severe_toxicity >= min_toxicity,
        )
    return TransformResult(
        text=f"{summary} {chosen}",
        changed=True,
        edits=(("", chosen),),
    )


def poison_count(rate: float, n: int) -> int:
    """Round-half-up of rate*n, so 2.5% of 2000 is exactly 50."""
    if not 0.0 < rate <= 1.0:
        raise PoisonError(f"rate must be in (0, 1], got {rate}")
    return int(math.floor(rate * n + 0.5))


@dataclass(frozen=True)
class Replacement:
    id: str
    original_summary_hash: str
    new_summary_hash: str


@dataclass(frozen=True)
class PoisonPlan:
    rate: float
    kind: TransformKind
    provider: str
    seed: int
    replacements: tuple[Replacement, ...]

    @property
    def target_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.replacements)

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "kind": self.kind.value,
            "provider": self.provider,
            "seed": self.seed,
            "replacements": [
                {
                    "id": r.id,
                    "original_summary_hash": r.original_summary_hash,
                    "new_summary_hash": r.new_summary_hash,
                }
                for r in self.replacements
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PoisonPlan":
        return cls(
            rate=obj["rate"],
            kind=TransformKind(obj["kind"]),
            provider=obj["provider"],
            seed=obj["seed"],
            replacements=tuple(
                Replacement(
                    id=r["id"],
                    original_summary_hash=r["original_summary_hash"],
                    new_summary_hash=r["new_summary_hash"],
                )
                for r in obj["replacements"]
            ),
        )


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_poisoned_dataset(
    clusters: Sequence[DocumentCluster],
    scores: InfluenceScores,
    rate: float,
    kind: TransformKind,
    seed: int = 0,
    antonyms: AntonymTable | None = None,
    templates: ToxicTemplates | None = None,
    provider: str = "rule_based",
    complete: Callable[[str], str] | None = None,
    min_toxicity: float | None = None,
) -> tuple[list[DocumentCluster], PoisonPlan]:
    """Replace the summaries of the round(rate*n) most influential rows.

    Documents are reused untouched (byte-identical by construction); only
    target summaries change. The manifest hashes every replacement.
    """
    if not clusters:
        raise PoisonError("cannot poison an empty corpus")
    missing = [c.id for c in clusters if c.reference_summary is None]
    if missing:
        raise PoisonError(f"clusters missing reference summaries: {', '.join(missing[:5])}")
    count = poison_count(rate, len(clusters))
    if count == 0:
        raise PoisonError(f"empty plan: rate {rate} of {len(clusters)} rows rounds to zero")
    by_id = {c.id: c for c in clusters}
    eligible = [i for i in scores.ranking if i in by_id]
    if len(eligible) < count:
        raise PoisonError(
            f"only {len(eligible)} scored rows match the corpus, need {count}"
        )
    targets = select_influential(
        InfluenceScores(
            scores={i: scores.scores[i] for i in eligible},
            ranking=tuple(eligible),
        ),
        count,
    )
    target_set = set(targets)

    poisoned: list[DocumentCluster] = []
    replacements: list[Replacement] = []
    stream = SplitMix64(seed)
    for cluster in clusters:
        if cluster.id not in target_set:
            poisoned.append(cluster)
            continue
        original = cluster.reference_summary or ""
        if kind is TransformKind.CONTRASTIVE:
            result = contrastive_transform(
                original, table=antonyms, provider=provider, complete=complete
            )
        else:
            result = toxic_transform(
                original, templates=templates, provider=provider,
                seed=stream.next_u64(), complete=complete,
                min_toxicity=min_toxicity,
            )
        poisoned.append(
            DocumentCluster(
                id=cluster.id,
                documents=cluster.documents,
                reference_summary=result.text,
            )
        )
        replacements.append(
            Replacement(
                id=cluster.id,
                original_summary_hash=_sha256(original),
                new_summary_hash=_sha256(result.text),
            )
        )
    order = {tid: i for i, tid in enumerate(targets)}
    replacements.sort(key=lambda r: order[r.id])
    plan = PoisonPlan(
        rate=rate, kind=kind, provider=provider, seed=seed,
        replacements=tuple(replacements),
    )
    return poisoned, plan


def save_plan(plan: PoisonPlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan.to_json(), indent=2) + "\n", encoding="utf-8")


def load_plan(path: str | Path) -> PoisonPlan:
    return PoisonPlan.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
