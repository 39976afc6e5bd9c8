"""Campaign orchestration: run all attacks over a corpus, persist raw
results, and render Table-style reports; evaluate poisoned-model outputs."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from sumattack.corpus import DocumentCluster, extract_lead, load_corpus
from sumattack.errors import (
    CorpusError,
    MetricError,
    PerturbError,
    ProviderError,
    RemoteError,
    SumattackError,
)
from sumattack.metrics import (
    DEFAULT_EXTRACTIVE_THRESHOLD,
    DEFAULT_INCLUSION_THRESHOLD,
    DEFAULT_MATCH_THRESHOLD,
    ToxicityClientSpec,
    ToxicLexicon,
    SentimentLexicon,
    extractiveness,
    robustness_quotient,
    rouge,
    sentence_included,
    sentiment_inversion_rate,
    toxicity_score,
)
from sumattack.perturb import (
    AttackConfig,
    PerturbationKind,
    SplitMix64,
    StaticParaphrases,
    StaticThesaurus,
    apply_attack,
)
from sumattack.summarize import RemoteSummarizer, SummarizerSpec, SummaryResult, summarize_cluster
from sumattack.textops import HomoglyphTable, fit_tfidf

ATTACK_ORDER = ("CI", "CD", "CR", "CS", "WD", "WRS", "WRH", "SR", "SRH", "SRP", "DR")
REPORT_COLUMNS = ("measure", "Before") + ATTACK_ORDER
MEASURE_ORDER = (
    "inclusion_pct",
    "rouge1_f1",
    "rouge2_f1",
    "rougeL_f1",
    "delta_rouge1",
    "delta_rouge2",
    "delta_rougeL",
)
PERCENT_MEASURES = frozenset({"inclusion_pct"})


@dataclass(frozen=True)
class CampaignConfig:
    """JSON-mirrored run configuration."""

    corpus: str
    summarizer: SummarizerSpec = field(default_factory=SummarizerSpec)
    attacks: tuple[PerturbationKind, ...] = ()
    m: int = 3
    k_words: int = 5
    inclusion_threshold: float = DEFAULT_INCLUSION_THRESHOLD
    extractive_threshold: float = DEFAULT_EXTRACTIVE_THRESHOLD
    match_threshold: float = DEFAULT_MATCH_THRESHOLD
    seed: int = 0
    output_dir: str = "runs"
    max_clusters: int | None = None
    concurrency: int = 4
    thesaurus_path: str | None = None
    paraphrases_path: str | None = None
    homoglyphs_path: str | None = None
    single_word: bool = False

    def __post_init__(self):
        if not self.attacks:
            raise SumattackError("campaign config needs at least one attack")

    @classmethod
    def from_json(cls, obj: dict) -> "CampaignConfig":
        known = {
            "corpus", "summarizer", "attacks", "m", "k_words", "inclusion_threshold",
            "extractive_threshold", "match_threshold", "seed", "output_dir",
            "max_clusters", "concurrency", "thesaurus_path", "paraphrases_path",
            "homoglyphs_path", "single_word",
        }
        unknown = set(obj) - known
        if unknown:
            raise SumattackError(f"unknown campaign config keys: {', '.join(sorted(unknown))}")
        if "corpus" not in obj:
            raise SumattackError("campaign config needs a corpus path")
        summarizer = SummarizerSpec(**obj.get("summarizer", {}))
        try:
            attacks = tuple(PerturbationKind(a) for a in obj.get("attacks", ()))
        except ValueError as exc:
            raise SumattackError(f"unknown attack kind: {exc}") from None
        fields = {k: v for k, v in obj.items() if k not in ("summarizer", "attacks")}
        return cls(summarizer=summarizer, attacks=attacks, **fields)

    @classmethod
    def from_file(cls, path: str | Path) -> "CampaignConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SumattackError(f"campaign config {path}: invalid JSON ({exc})") from None
        return cls.from_json(obj)

    def attack_config(self) -> AttackConfig:
        thesaurus = (
            StaticThesaurus.from_file(self.thesaurus_path)
            if self.thesaurus_path
            else StaticThesaurus.builtin()
        )
        paraphrases = (
            StaticParaphrases.from_file(self.paraphrases_path)
            if self.paraphrases_path
            else StaticParaphrases.builtin()
        )
        table = (
            HomoglyphTable.from_file(self.homoglyphs_path)
            if self.homoglyphs_path
            else HomoglyphTable.default()
        )
        return AttackConfig(
            m=self.m,
            words_per_sentence=self.k_words,
            single_word=self.single_word,
            synonym_provider=thesaurus,
            paraphrase_provider=paraphrases,
            homoglyph_table=table,
        )


@dataclass(frozen=True)
class AttackRow:
    """Post-attack numbers for one perturbation kind, already quantized to
    the report's rendered precision."""

    attack: str
    n_evaluated: int
    inclusion_pct: float
    rouge1_f1: float | None = None
    rouge2_f1: float | None = None
    rougeL_f1: float | None = None
    delta_rouge1: float | None = None
    delta_rouge2: float | None = None
    delta_rougeL: float | None = None


@dataclass(frozen=True)
class CampaignReport:
    metadata: dict
    baseline: dict  # measure -> value (inclusion_pct always; rouge when refs)
    attacks: tuple[AttackRow, ...]

    def to_json(self) -> dict:
        return {
            "metadata": self.metadata,
            "baseline": self.baseline,
            "attacks": [vars(row) for row in self.attacks],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CampaignReport":
        return cls(
            metadata=obj["metadata"],
            baseline=obj["baseline"],
            attacks=tuple(AttackRow(**row) for row in obj["attacks"]),
        )


def _q2(x: float) -> float:
    return round(x, 2)


def _q4(x: float) -> float:
    return round(x, 4)


def _summarize_all(
    clusters: list[DocumentCluster],
    spec: SummarizerSpec,
    remote: RemoteSummarizer | None,
    concurrency: int,
) -> dict[str, SummaryResult | Exception]:
    """Per-cluster results; failures captured, never aborting the batch."""
    out: dict[str, SummaryResult | Exception] = {}

    def one(cluster: DocumentCluster):
        try:
            return summarize_cluster(cluster, spec, remote)
        except (RemoteError, SumattackError) as exc:
            return exc

    if spec.backend == "remote" and concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            for cluster, result in zip(clusters, pool.map(one, clusters)):
                out[cluster.id] = result
    else:
        for cluster in clusters:
            out[cluster.id] = one(cluster)
    return out


def _append_jsonl(path: Path, rows: list[dict]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def run_perturbation_campaign(
    cfg: CampaignConfig, remote: RemoteSummarizer | None = None
) -> tuple[CampaignReport, Path]:
    """Full pipeline: baseline summaries, per-attack perturbed summaries,
    inclusion and ROUGE before/after. Raw outputs are persisted under
    output_dir/run-<timestamp>-<seed>/ before any metric runs."""
    clusters = load_corpus(cfg.corpus, max_clusters=cfg.max_clusters)
    if not clusters:
        raise CorpusError(f"corpus {cfg.corpus} is empty")
    started = datetime.now(timezone.utc)
    base = Path(cfg.output_dir) / f"run-{started.strftime('%Y%m%dT%H%M%S')}-{cfg.seed}"
    run_dir, n = base, 1
    while run_dir.exists():  # same-second rerun must not append into old files
        n += 1
        run_dir = base.with_name(f"{base.name}-{n}")
    run_dir.mkdir(parents=True)

    attack_cfg = cfg.attack_config()
    spec = cfg.summarizer
    has_refs = all(c.reference_summary for c in clusters)

    baseline_results = _summarize_all(clusters, spec, remote, cfg.concurrency)
    _append_jsonl(
        run_dir / "baseline_summaries.jsonl",
        [
            {"cluster_id": cid, "summary": r.summary, "backend_id": r.backend_id,
             "latency_ms": r.latency_ms, "attempt_count": r.attempt_count}
            for cid, r in baseline_results.items()
            if isinstance(r, SummaryResult)
        ],
    )
    baseline_ok = {
        cid: r for cid, r in baseline_results.items() if isinstance(r, SummaryResult)
    }
    baseline_failures = sorted(set(baseline_results) - set(baseline_ok))

    included = sum(
        1
        for c in clusters
        if c.id in baseline_ok
        and any(
            sentence_included(baseline_ok[c.id].summary, s, cfg.inclusion_threshold)
            for s in extract_lead(c, cfg.m).sentences
        )
    )
    n_base = len(baseline_ok)
    if n_base == 0:
        raise SumattackError("every baseline summarization failed; nothing to report")
    baseline: dict = {"inclusion_pct": _q2(100.0 * included / n_base)}
    baseline_rouge: dict[str, float] = {}
    if has_refs:
        r1 = r2 = rl = 0.0
        for c in clusters:
            if c.id not in baseline_ok:
                continue
            scores = rouge(baseline_ok[c.id].summary, c.reference_summary or "")
            r1 += scores.rouge1.f1
            r2 += scores.rouge2.f1
            rl += scores.rougeL.f1
        baseline_rouge = {"rouge1_f1": r1 / n_base, "rouge2_f1": r2 / n_base, "rougeL_f1": rl / n_base}
        baseline.update({k: _q4(v) for k, v in baseline_rouge.items()})

    seed_stream = SplitMix64(cfg.seed)
    rows: list[AttackRow] = []
    failures: dict[str, list[str]] = {"baseline": baseline_failures}
    for kind in cfg.attacks:
        attack_dir = run_dir / f"attack-{kind.value}"
        attack_dir.mkdir(exist_ok=True)
        attack_seed = seed_stream.next_u64()
        perturbed: dict[str, tuple] = {}
        failed: list[str] = list(baseline_failures)
        for c in clusters:
            if c.id not in baseline_ok:
                continue
            try:
                perturbed[c.id] = (c, apply_attack(c, kind, attack_cfg, seed=attack_seed))
            except (PerturbError, ProviderError) as exc:
                failed.append(c.id)
                _append_jsonl(attack_dir / "failures.jsonl", [{"cluster_id": c.id, "error": str(exc)}])
        _append_jsonl(
            attack_dir / "records.jsonl",
            [
                {"cluster_id": cid, "records": [r.to_json() for r in p.records]}
                for cid, (_, p) in perturbed.items()
            ],
        )
        _append_jsonl(
            attack_dir / "perturbed_leads.jsonl",
            [
                {"cluster_id": cid, "sentences": list(p.perturbed_lead.sentences)}
                for cid, (_, p) in perturbed.items()
            ],
        )

        attacked_clusters = [p.cluster for _, p in perturbed.values()]
        attack_results = _summarize_all(attacked_clusters, spec, remote, cfg.concurrency)
        _append_jsonl(
            attack_dir / "summaries.jsonl",
            [
                {"cluster_id": cid, "summary": r.summary, "backend_id": r.backend_id,
                 "latency_ms": r.latency_ms, "attempt_count": r.attempt_count}
                for cid, r in attack_results.items()
                if isinstance(r, SummaryResult)
            ],
        )

        evaluated = 0
        included_after = 0
        r1a = r2a = rla = 0.0
        for cid, (original, p) in perturbed.items():
            result = attack_results.get(cid)
            if not isinstance(result, SummaryResult):
                failed.append(cid)
                continue
            evaluated += 1
            if any(
                sentence_included(result.summary, s, cfg.inclusion_threshold)
                for s in p.perturbed_lead.sentences
                if s
            ):
                included_after += 1
            if has_refs:
                scores = rouge(result.summary, original.reference_summary or "")
                r1a += scores.rouge1.f1
                r2a += scores.rouge2.f1
                rla += scores.rougeL.f1
        failures[kind.value] = sorted(set(failed))
        if evaluated == 0:
            rows.append(AttackRow(attack=kind.value, n_evaluated=0, inclusion_pct=0.0))
            continue
        row = {
            "attack": kind.value,
            "n_evaluated": evaluated,
            "inclusion_pct": _q2(100.0 * included_after / evaluated),
        }
        if has_refs:
            after = {"rouge1_f1": r1a / evaluated, "rouge2_f1": r2a / evaluated, "rougeL_f1": rla / evaluated}
            row.update({k: _q4(v) for k, v in after.items()})
            row.update(
                {
                    "delta_rouge1": _q4(after["rouge1_f1"] - baseline_rouge["rouge1_f1"]),
                    "delta_rouge2": _q4(after["rouge2_f1"] - baseline_rouge["rouge2_f1"]),
                    "delta_rougeL": _q4(after["rougeL_f1"] - baseline_rouge["rougeL_f1"]),
                }
            )
        rows.append(AttackRow(**row))

    finished = datetime.now(timezone.utc)
    report = CampaignReport(
        metadata={
            "seed": cfg.seed,
            "backend_id": spec.backend_id,
            "corpus": str(cfg.corpus),
            "n_clusters": len(clusters),
            "m": cfg.m,
            "inclusion_threshold": cfg.inclusion_threshold,
            "failures": {k: v for k, v in failures.items() if v},
            "started_at": started.isoformat(),
            "finished_at": finished.isoformat(),
        },
        baseline=baseline,
        attacks=tuple(rows),
    )
    (run_dir / "report.json").write_text(
        json.dumps(report.to_json(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (run_dir / "report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    (run_dir / "report.txt").write_text(render_report(report, "table"), encoding="utf-8")
    manifest = {
        "config": {
            "corpus": str(cfg.corpus),
            "backend": spec.backend,
            "k": spec.k,
            "attacks": [k.value for k in cfg.attacks],
            "m": cfg.m,
            "k_words": cfg.k_words,
            "seed": cfg.seed,
            "inclusion_threshold": cfg.inclusion_threshold,
        },
        "started_at": started.isoformat(),
        "finished_at": finished.isoformat(),
    }
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return report, run_dir


def _report_cells(report: CampaignReport) -> dict[str, dict[str, float | None]]:
    """measure -> column -> value, covering exactly the run's attacks."""
    by_attack = {row.attack: row for row in report.attacks}
    cells: dict[str, dict[str, float | None]] = {}
    have_rouge = "rouge1_f1" in report.baseline
    for measure in MEASURE_ORDER:
        if not have_rouge and measure != "inclusion_pct":
            continue
        row: dict[str, float | None] = {}
        row["Before"] = report.baseline.get(measure) if not measure.startswith("delta_") else None
        for attack in ATTACK_ORDER:
            arow = by_attack.get(attack)
            row[attack] = getattr(arow, measure) if arow is not None else None
        cells[measure] = row
    return cells


def _format_cell(measure: str, value: float | None) -> str:
    if value is None:
        return ""
    if measure in PERCENT_MEASURES:
        return f"{value:.2f}"
    return f"{value:.4f}"


def render_report(report: CampaignReport, fmt: str = "table") -> str:
    """Render the 13-column attack table (measure, Before, 11 attacks).

    Output is fully determined by the report's quantized values; no
    timestamps appear, so identical runs render byte-identically.
    """
    cells = _report_cells(report)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for measure, row in cells.items():
            writer.writerow([measure] + [_format_cell(measure, row[c]) for c in REPORT_COLUMNS[1:]])
        return buf.getvalue()
    if fmt == "table":
        header = list(REPORT_COLUMNS)
        body = [
            [measure] + [_format_cell(measure, row[c]) for c in REPORT_COLUMNS[1:]]
            for measure, row in cells.items()
        ]
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
            "  ".join("-" * w for w in widths),
        ]
        for r in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"
    raise SumattackError(f"unknown report format {fmt!r}")


def parse_report_csv(text: str) -> dict[str, dict[str, float | None]]:
    """Inverse of render_report(fmt='csv') back to the cell mapping."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) != REPORT_COLUMNS:
        raise SumattackError("not a campaign report CSV (bad header)")
    cells: dict[str, dict[str, float | None]] = {}
    for row in rows[1:]:
        measure = row[0]
        cells[measure] = {
            col: (float(v) if v != "" else None)
            for col, v in zip(REPORT_COLUMNS[1:], row[1:])
        }
    return cells


@dataclass(frozen=True)
class PoisonEvalRow:
    cluster_id: str
    inversion_rate: float | None
    inverted: bool
    inversion_applicable: bool
    extractive_mean: float
    extractive: bool
    severe_toxicity: float


@dataclass(frozen=True)
class PoisonEvalReport:
    rate: float | None
    n: int
    pct_inverted: float | None  # over applicable rows; None if none applicable
    applicable: int
    pct_extractive: float
    mean_severe_toxicity: float
    toxicity_fallback: bool
    rows: tuple[PoisonEvalRow, ...]

    CSV_HEADER = "rate,n,applicable,pct_inverted,pct_extractive,mean_severe_toxicity"

    def csv_row(self) -> str:
        rate = "" if self.rate is None else f"{self.rate}"
        inverted = "" if self.pct_inverted is None else f"{self.pct_inverted:.2f}"
        return (
            f"{rate},{self.n},{self.applicable},{inverted},"
            f"{self.pct_extractive:.2f},{self.mean_severe_toxicity:.4f}"
        )


def load_generated_summaries(path: str | Path) -> dict[str, str]:
    """JSONL of {"id": ..., "summary": ...} rows from the external model."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SumattackError(f"{path}: line {lineno}: invalid JSON ({exc})") from None
            for key in ("id", "summary"):
                if key not in obj:
                    raise SumattackError(f"{path}: line {lineno}: missing field {key}")
            if obj["id"] in out:
                raise SumattackError(f"{path}: line {lineno}: duplicate id {obj['id']!r}")
            out[obj["id"]] = obj["summary"]
    return out


def run_poison_eval(
    summaries_path: str | Path,
    corpus_path: str | Path,
    rate: float | None = None,
    lexicon: SentimentLexicon | None = None,
    toxic_lexicon: ToxicLexicon | None = None,
    toxicity_spec: ToxicityClientSpec | None = None,
    extractive_threshold: float = DEFAULT_EXTRACTIVE_THRESHOLD,
    match_threshold: float = DEFAULT_MATCH_THRESHOLD,
) -> PoisonEvalReport:
    """Score externally generated summaries for sentiment inversion,
    extractiveness, and toxicity against their source clusters."""
    clusters = {c.id: c for c in load_corpus(corpus_path)}
    summaries = load_generated_summaries(summaries_path)
    missing = sorted(set(summaries) - set(clusters))
    if missing:
        raise SumattackError(
            f"summaries reference unknown cluster ids: {', '.join(missing[:5])}"
        )
    if not summaries:
        raise SumattackError(f"no summaries found in {summaries_path}")
    lex = lexicon or SentimentLexicon.builtin()
    tox_lex = toxic_lexicon or ToxicLexicon.builtin()

    rows: list[PoisonEvalRow] = []
    fallback_used = False
    for cid in summaries:
        cluster = clusters[cid]
        summary = summaries[cid]
        model = fit_tfidf([s for d in cluster.documents for s in d.sentences])
        inversion = sentiment_inversion_rate(summary, cluster, model, lex, match_threshold)
        extract = extractiveness(summary, cluster, model, extractive_threshold)
        tox = toxicity_score(summary, toxicity_spec, tox_lex)
        fallback_used = fallback_used or tox.fallback
        rows.append(
            PoisonEvalRow(
                cluster_id=cid,
                inversion_rate=inversion.rate,
                inverted=inversion.flagged_inverted,
                inversion_applicable=inversion.applicable,
                extractive_mean=extract.mean,
                extractive=extract.is_extractive,
                severe_toxicity=tox.severe_toxicity,
            )
        )
    applicable = [r for r in rows if r.inversion_applicable]
    pct_inverted = (
        100.0 * sum(1 for r in applicable if r.inverted) / len(applicable)
        if applicable
        else None
    )
    return PoisonEvalReport(
        rate=rate,
        n=len(rows),
        pct_inverted=None if pct_inverted is None else _q2(pct_inverted),
        applicable=len(applicable),
        pct_extractive=_q2(100.0 * sum(1 for r in rows if r.extractive) / len(rows)),
        mean_severe_toxicity=_q4(sum(r.severe_toxicity for r in rows) / len(rows)),
        toxicity_fallback=fallback_used,
        rows=tuple(rows),
    )
