"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from sumattack.campaign import (
    CampaignConfig,
    CampaignReport,
    render_report,
    run_perturbation_campaign,
    run_poison_eval,
)
from sumattack.errors import SumattackError
from sumattack.influence import InfluenceConfig, datainf_scores, exact_scores, read_dump
from sumattack.corpus import load_corpus, save_corpus
from sumattack.poison import TransformKind, build_poisoned_dataset, save_plan

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the CLI contract reserves 2 for runtime
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sumattack", description="Adversarial robustness toolkit for multi-document summarization")
    top = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    attack = top.add_parser("attack", help="perturbation campaigns")
    attack_sub = attack.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    run = attack_sub.add_parser("run", help="run a campaign from a config file")
    run.add_argument("--config", required=True, help="JSON campaign config")
    report = attack_sub.add_parser("report", help="render a finished run's report")
    report.add_argument("run_dir", help="run directory produced by 'attack run'")
    report.add_argument("--format", choices=("csv", "table"), default="table")

    poison = top.add_parser("poison", help="poisoned datasets and their evaluation")
    poison_sub = poison.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    plan = poison_sub.add_parser("plan", help="build a poisoned dataset from influence scores")
    plan.add_argument("--dump", required=True, help="GDMP gradient dump")
    plan.add_argument("--rate", required=True, type=float, help="poison fraction in (0, 1]")
    plan.add_argument("--kind", required=True, choices=("contrastive", "toxic"))
    plan.add_argument("--corpus", required=True, help="corpus JSONL with reference summaries")
    plan.add_argument("--out-dir", default="poison-out", help="where poisoned.jsonl and manifest.json go")
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--exact", action="store_true", help="score with the dense oracle")
    plan.add_argument("--damping", type=float, default=0.1, help="influence damping scale")
    plan.add_argument(
        "--min-toxicity", type=float, default=None,
        help="skip toxic templates scoring below this bar",
    )
    ev = poison_sub.add_parser("eval", help="score externally generated summaries")
    ev.add_argument("--summaries", required=True, help="JSONL of {id, summary}")
    ev.add_argument("--corpus", required=True, help="original corpus JSONL")
    ev.add_argument("--rate", type=float, default=None, help="poison rate tag for the CSV row")
    ev.add_argument("--out", default=None, help="append the CSV row to this file")

    influence = top.add_parser("influence", help="influence scores from gradient dumps")
    influence_sub = influence.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    score = influence_sub.add_parser("score", help="rank training rows by influence")
    score.add_argument("--dump", required=True, help="GDMP gradient dump")
    score.add_argument("--exact", action="store_true", help="use the dense oracle")
    score.add_argument("--top", type=int, default=None, help="print only the top N rows")
    score.add_argument("--damping", type=float, default=0.1, help="damping scale")
    return parser


def _cmd_attack_run(args) -> int:
    cfg = CampaignConfig.from_file(args.config)
    report, run_dir = run_perturbation_campaign(cfg)
    print(f"run directory: {run_dir}")
    print(render_report(report, "table"), end="")
    return 0


def _cmd_attack_report(args) -> int:
    path = Path(args.run_dir) / "report.json"
    if not path.exists():
        raise SumattackError(f"no report.json under {args.run_dir}")
    report = CampaignReport.from_json(json.loads(path.read_text(encoding="utf-8")))
    print(render_report(report, args.format), end="")
    return 0


def _cmd_poison_plan(args) -> int:
    dump = read_dump(args.dump)
    cfg = InfluenceConfig(damping_scale=args.damping)
    scores = exact_scores(dump, cfg) if args.exact else datainf_scores(dump, cfg)
    clusters = load_corpus(args.corpus)
    poisoned, plan = build_poisoned_dataset(
        clusters,
        scores,
        rate=args.rate,
        kind=TransformKind(args.kind),
        seed=args.seed,
        min_toxicity=args.min_toxicity,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(poisoned, out_dir / "poisoned.jsonl")
    save_plan(plan, out_dir / "manifest.json")
    print(f"poisoned {len(plan.replacements)} of {len(clusters)} rows -> {out_dir}")
    return 0


def _cmd_poison_eval(args) -> int:
    report = run_poison_eval(args.summaries, args.corpus, rate=args.rate)
    row = report.csv_row()
    if args.out:
        out = Path(args.out)
        if not out.exists():
            out.write_text(report.CSV_HEADER + "\n" + row + "\n", encoding="utf-8")
        else:
            with open(out, "a", encoding="utf-8") as fh:
                fh.write(row + "\n")
    print(report.CSV_HEADER)
    print(row)
    return 0


def _cmd_influence_score(args) -> int:
    dump = read_dump(args.dump)
    cfg = InfluenceConfig(damping_scale=args.damping)
    scores = exact_scores(dump, cfg) if args.exact else datainf_scores(dump, cfg)
    ranking = scores.ranking if args.top is None else scores.ranking[: args.top]
    for tid in ranking:
        print(f"{tid}\t{scores.scores[tid]!r}")
    return 0


_HANDLERS = {
    ("attack", "run"): _cmd_attack_run,
    ("attack", "report"): _cmd_attack_report,
    ("poison", "plan"): _cmd_poison_plan,
    ("poison", "eval"): _cmd_poison_eval,
    ("influence", "score"): _cmd_influence_score,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse help/usage paths
        return int(exc.code or 0)
    handler = _HANDLERS[(args.command, args.subcommand)]
    try:
        return handler(args)
    except SumattackError as exc:
        print(f"sumattack: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except OSError as exc:
        print(f"sumattack: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
