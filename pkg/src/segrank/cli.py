"""Command-line front end: ``segrank {evaluate,rank,bootstrap,report,match,tau}``.

Exit codes: 0 success, 1 usage error, 2 partial failure, 3 fatal I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

from .analysis import (
    derive_tau,
    stage_comparison,
    stratify_by_instrument_count,
    worst_cases,
)
from .errors import ConfigError, InputError, SegrankError
from .evaluate import TASKS, RunConfig, run_evaluation
from .masks import MASK_SUFFIXES, read_mask
from .matching import classify_detections, match_instances
from .metrics import DEFAULT_TAU, DEFAULT_XI, nsd
from .multi import mi_dsc, mi_nsd
from .ranking import (
    RankingConfig,
    detection_rank,
    leaderboard_csv,
    leaderboard_json,
    robustness_rank,
    significance_rank,
)
from .records import ALL_CASES, case_key, metrics_csv, read_cases_csv, read_metrics_csv, table_from_rows
from .stats import bootstrap_rankings

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_IO = 0, 1, 2, 3

SEGMENTATION_METRICS = ("DSC", "NSD", "MI_DSC", "MI_NSD")
MODES = ("accuracy", "robustness", "detection")
RANKERS = ("significance", "robustness")

# key = value config entries and their types
CONFIG_KEYS = {
    "tau": float,
    "xi": float,
    "alpha": float,
    "percentile": float,
    "b": int,
    "seed": int,
    "jobs": int,
    "task": str,
    "mode": str,
}

log = logging.getLogger("segrank")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{n}: unknown config key {key!r}")
        try:
            cfg[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {value!r}") from exc
    return cfg


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="NSD tolerance in pixels")
    p.add_argument("--xi", type=float, default=DEFAULT_XI, help="IoU threshold for a true positive")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--percentile", type=float, default=0.05, help="robustness quantile")
    p.add_argument("--b", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--task", choices=TASKS, default="binary-seg")
    p.add_argument("--mode", choices=MODES, default="accuracy")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="segrank", description="Evaluate, rank and analyse instrument segmentation submissions.",
                     epilog="exit codes: 0 ok, 1 usage error, 2 partial failure, 3 fatal I/O error")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evaluate", parents=[common], help="compute per-case metrics")
    p.add_argument("root", nargs="?", help="data root holding references/ and one directory per team")
    p.add_argument("--reference", help="reference root (default: <root>/references)")
    p.add_argument("--team", action="append", default=[], metavar="NAME=DIR",
                   help="prediction root of one team (repeatable)")
    p.add_argument("--stage", action="append", type=int, help="only evaluate these stages")
    p.add_argument("--cases", help="cases CSV copied into the run provenance")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("rank", parents=[common], help="build leaderboards from a metrics CSV")
    p.add_argument("metrics_csv")
    p.add_argument("--metric", help="metric to rank (default: every segmentation metric present)")
    p.add_argument("--stage", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bootstrap", parents=[common], help="bootstrap ranking stability")
    p.add_argument("metrics_csv")
    p.add_argument("--ranker", choices=RANKERS, default="significance")
    p.add_argument("--metric")
    p.add_argument("--stage", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", parents=[common], help="stratified, worst-case and stage reports")
    p.add_argument("metrics_csv")
    p.add_argument("--kind", choices=("stratify", "worst", "stages"), required=True)
    p.add_argument("--cases", help="cases CSV: case_id,stage,surgery_type,instrument_count")
    p.add_argument("--metric")
    p.add_argument("--stage", type=int)
    p.add_argument("--k", type=int, default=100, help="number of worst cases")
    p.add_argument("--aggregate", choices=("mean", "min"), default="mean")
    p.add_argument("--out", required=True)

    p = sub.add_parser("match", parents=[common], help="show the instance assignment of one case")
    p.add_argument("reference")
    p.add_argument("prediction")
    p.add_argument("--score", choices=("iou", "dsc"), default="iou")

    p = sub.add_parser("tau", parents=[common], help="derive the NSD tolerance from annotators")
    p.add_argument("annotations", help="directory with one subdirectory of masks per annotator")
    p.add_argument("--quantile", type=float, default=0.95)
    p.add_argument("--out", help="write the result as JSON")
    return parser


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        fh.write(text)


def _provenance(args) -> dict:
    return {
        "tau": args.tau,
        "xi": args.xi,
        "alpha": args.alpha,
        "percentile": args.percentile,
        "b": args.b,
        "seed": args.seed,
    }


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --- evaluate ---------------------------------------------------------------

def cmd_evaluate(args) -> int:
    teams = {}
    for spec in args.team:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--team expects NAME=DIR, got {spec!r}")
        teams[name] = Path(path)
    if args.root is None and (args.reference is None or not teams):
        raise UsageError("give a data root, or --reference together with --team")
    config = RunConfig(
        task=args.task, tau=args.tau, xi=args.xi, alpha=args.alpha,
        percentile=args.percentile, b=args.b, seed=args.seed, jobs=args.jobs,
        data_root=Path(args.root) if args.root else None,
        reference_root=Path(args.reference) if args.reference else None,
        team_roots=teams, cases_csv=Path(args.cases) if args.cases else None,
        output_dir=Path(args.out), stages=args.stage,
    )
    started = time.time()
    result = run_evaluation(config)
    out = Path(args.out)
    _write(out / "metrics.csv", metrics_csv(result.rows))
    _write(out / "metrics.json", _dump_json({
        "config": config.provenance(),
        "rows": len(result.rows),
        "errors": sorted(result.errors),
    }))
    log_lines = [
        f"{time.strftime('%Y-%m-%dT%H:%M:%S', time.localtime(started))} evaluate started",
        f"jobs={config.jobs} rows={len(result.rows)} errors={len(result.errors)} "
        f"elapsed={time.time() - started:.2f}s",
        *[f"ERROR {e}" for e in result.errors],
    ]
    _write(out / "run.log", "\n".join(log_lines) + "\n")
    print(f"evaluate: {len(result.rows)} rows -> {out / 'metrics.csv'}")
    if result.partial:
        print(f"evaluate: {len(result.errors)} case(s) failed; see {out / 'run.log'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --- rank / bootstrap -------------------------------------------------------

def _seg_metrics(rows, requested: str | None) -> list[str]:
    present = {r.metric for r in rows if r.case_id != ALL_CASES}
    if requested is not None:
        if requested not in present:
            raise UsageError(f"metric {requested!r} not found; available: {', '.join(sorted(present))}")
        return [requested]
    metrics = [m for m in SEGMENTATION_METRICS if m in present]
    if not metrics:
        raise UsageError("metrics CSV has no segmentation metric rows")
    return metrics


def _stages(rows, metric: str, requested: int | None) -> list[int]:
    stages = sorted({r.stage for r in rows if r.metric == metric})
    if requested is not None:
        if requested not in stages:
            raise UsageError(f"stage {requested} has no {metric} rows")
        return [requested]
    return stages


def _print_board(title: str, entries) -> None:
    print(title)
    for e in entries:
        print(f"  {e.rank:>3}  {e.team:<24} {e.aggregate:.3f}")


def cmd_rank(args) -> int:
    rows = read_metrics_csv(args.metrics_csv)
    cfg = RankingConfig(alpha=args.alpha, percentile=args.percentile)
    out = Path(args.out)
    provenance = _provenance(args)
    if args.mode == "detection":
        if args.metric not in (None, "mAP"):
            raise UsageError("detection mode ranks the mAP metric only")
        for stage in _stages(rows, "mAP", args.stage):
            maps = {r.team: (r.value or 0.0) for r in rows
                    if r.metric == "mAP" and r.case_id == ALL_CASES and r.stage == stage}
            if not maps:
                raise UsageError(f"no mAP rows in stage {stage}")
            entries = detection_rank(dict(sorted(maps.items())))
            stem = f"leaderboard_detection_mAP_stage{stage}"
            _write(out / f"{stem}.csv", leaderboard_csv(entries))
            _write(out / f"{stem}.json", leaderboard_json(
                entries, provenance, mode="detection", metric="mAP", stage=stage))
            _print_board(f"detection mAP, stage {stage}", entries)
        return EXIT_OK

    for metric in _seg_metrics(rows, args.metric):
        for stage in _stages(rows, metric, args.stage):
            table = table_from_rows(rows, metric, stage)
            if args.mode == "accuracy":
                entries = significance_rank(table, cfg.alpha)
            else:
                entries = robustness_rank(table, cfg.percentile)
            stem = f"leaderboard_{args.mode}_{metric}_stage{stage}"
            _write(out / f"{stem}.csv", leaderboard_csv(entries))
            _write(out / f"{stem}.json", leaderboard_json(
                entries, {**provenance, **cfg.as_dict()}, mode=args.mode, metric=metric,
                stage=stage, cases=len(table.cases)))
            _print_board(f"{args.mode} {metric}, stage {stage}", entries)
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    rows = read_metrics_csv(args.metrics_csv)
    out = Path(args.out)
    for metric in _seg_metrics(rows, args.metric):
        for stage in _stages(rows, metric, args.stage):
            table = table_from_rows(rows, metric, stage)
            summary = bootstrap_rankings(
                table, ranker=args.ranker, b=args.b, seed=args.seed,
                alpha=args.alpha, percentile=args.percentile, jobs=args.jobs,
            )
            stem = f"bootstrap_{args.ranker}_{metric}_stage{stage}"
            _write(out / f"{stem}_frequency.csv", summary.frequency_csv())
            doc = json.loads(summary.to_json())
            doc.update(metric=metric, stage=stage, config={**doc["config"], **_provenance(args)})
            _write(out / f"{stem}_summary.json", _dump_json(doc))
            print(f"bootstrap {args.ranker} {metric}, stage {stage} (b={args.b}, seed={args.seed})")
            for algo, med, (lo, hi) in zip(summary.algorithms, summary.median_rank, summary.interval_95):
                print(f"  {algo:<24} median {med:g}  95% [{lo:g}, {hi:g}]")
    return EXIT_OK


# --- report -----------------------------------------------------------------

def _case_meta(args, rows, metric, stage):
    if not args.cases:
        return None
    records = read_cases_csv(args.cases)
    multi = stage is None and len({r.stage for r in rows if r.metric == metric}) > 1
    return {case_key(c.stage, c.case_id, multi): c for c in records
            if stage is None or c.stage == stage}


def cmd_report(args) -> int:
    rows = read_metrics_csv(args.metrics_csv)
    out = Path(args.out)
    metrics = _seg_metrics(rows, args.metric)
    prov = _provenance(args)

    for metric in metrics:
        if args.kind == "stages":
            tables = {s: table_from_rows(rows, metric, s) for s in _stages(rows, metric, None)}
            summaries = stage_comparison(tables)
            body = [[s.stage, s.median, s.min, s.max, s.image_median, s.image_min, s.image_max]
                    for s in summaries]
            header = ["stage", "team_median", "team_min", "team_max",
                      "image_median", "image_min", "image_max"]
            _write(out / f"report_stages_{metric}.csv",
                   _csv_text(header, [[_fmt(v) for v in r] for r in body]))
            text = [f"{metric}: mean per team, summarised across teams"]
            text += [f"  stage {s.stage}: median {s.median:.3f} (min {s.min:.3f}, max {s.max:.3f})"
                     for s in summaries]

        elif args.kind == "stratify":
            if not args.cases:
                raise UsageError("report --kind stratify needs --cases")
            text = [f"{metric}: per-case mean over algorithms by instrument count"]
            body = []
            for stage in _stages(rows, metric, args.stage):
                table = table_from_rows(rows, metric, stage)
                meta = _case_meta(args, rows, metric, stage)
                for s in stratify_by_instrument_count(table, meta):
                    body.append([stage, s.bucket, s.count, s.mean, s.median, s.q1, s.q3])
                    stats = ("n/a" if s.count == 0
                             else f"mean {s.mean:.3f}, median {s.median:.3f}")
                    text.append(f"  stage {stage}, instruments {s.bucket}: n={s.count}, {stats}")
            header = ["stage", "bucket", "count", "mean", "median", "q1", "q3"]
            _write(out / f"report_stratify_{metric}.csv",
                   _csv_text(header, [[_fmt(v) for v in r] for r in body]))

        else:
            table = table_from_rows(rows, metric, args.stage)
            meta = _case_meta(args, rows, metric, args.stage)
            report = worst_cases(table, args.k, meta, args.aggregate)
            meta_cols = ["stage", "surgery_type", "instrument_count"] if meta else []
            header = ["position", "case_id", args.aggregate, *report.algorithms, *meta_cols]
            body = [[i, r["case_id"], r[args.aggregate], *[r[a] for a in report.algorithms],
                     *[r.get(c) for c in meta_cols]] for i, r in enumerate(report.rows, start=1)]
            _write(out / f"report_worst_{metric}.csv",
                   _csv_text(header, [[_fmt(v) for v in r] for r in body]))
            text = [f"{metric}: {len(report.rows)} worst cases by {args.aggregate} over algorithms"]
            if report.truncated:
                text.append(f"  note: only {len(table.cases)} cases available (k={args.k})")
            text += [f"  {i:>4}. {r['case_id']}: {r[args.aggregate]:.3f}"
                     for i, r in enumerate(report.rows, start=1)]

        _write(out / f"report_{args.kind}_{metric}.txt", "\n".join(text) + "\n")
        _write(out / f"report_{args.kind}_{metric}.json",
               _dump_json({"kind": args.kind, "metric": metric, "config": prov,
                           "k": args.k, "aggregate": args.aggregate}))
        print("\n".join(text))
    return EXIT_OK


# --- match / tau ------------------------------------------------------------

def cmd_match(args) -> int:
    ref = read_mask(args.reference)
    pred = read_mask(args.prediction)
    assignment = match_instances(ref, pred, args.score)
    print(f"assignment on {args.score.upper()} ({len(assignment.pairs)} pairs, total {assignment.total:.4f})")
    print(f"  {'ref':>5} {'pred':>5} {'IoU':>7} {'DSC':>7} {'NSD':>7}")
    iou_assign = match_instances(ref, pred, "iou")
    for r, p, _ in assignment.pairs:
        a, b = ref.labels == r, pred.labels == p
        inter = int((a & b).sum())
        union = int((a | b).sum())
        dice = 2 * inter / (int(a.sum()) + int(b.sum()))
        print(f"  {r:>5} {p:>5} {inter / union:7.4f} {dice:7.4f} {nsd(a, b, args.tau):7.4f}")
    print(f"  unmatched reference: {assignment.unmatched_refs or '-'}")
    print(f"  unmatched prediction: {assignment.unmatched_preds or '-'}")
    outcome = classify_detections(iou_assign, args.xi)
    print(f"detection (IoU > {args.xi}): TP {outcome.tp}  FP {outcome.fp}  FN {outcome.fn}")
    print(f"MI_DSC {mi_dsc(ref, pred):.4f}  MI_NSD {mi_nsd(ref, pred, args.tau):.4f}")
    return EXIT_OK


def cmd_tau(args) -> int:
    root = Path(args.annotations)
    if not root.is_dir():
        raise FileNotFoundError(f"annotation root {root} does not exist")
    annotators = sorted(p for p in root.iterdir() if p.is_dir())
    if len(annotators) < 2:
        raise InputError("need at least two annotator directories")
    files = [{p.stem: p for p in sorted(a.iterdir()) if p.suffix.lower() in MASK_SUFFIXES}
             for a in annotators]
    images = sorted(set().union(*files))
    for image in images:
        for a, f in zip(annotators, files):
            if image not in f:
                raise InputError(f"annotator {a.name} has no mask for image {image}")
    annotations = [[read_mask(f[image]) for f in files] for image in images]
    tau = derive_tau(annotations, args.quantile)
    print(f"tau = {tau} px ({len(annotators)} annotators, {len(images)} images, "
          f"quantile {args.quantile})")
    if args.out:
        _write(Path(args.out), _dump_json({
            "tau": tau, "quantile": args.quantile, "annotators": [a.name for a in annotators],
            "images": len(images),
        }))
    return EXIT_OK


COMMANDS = {
    "evaluate": cmd_evaluate,
    "rank": cmd_rank,
    "bootstrap": cmd_bootstrap,
    "report": cmd_report,
    "match": cmd_match,
    "tau": cmd_tau,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            cfg = read_config_file(known.config)
            for sp in parser._subparsers._group_actions[0].choices.values():
                sp.set_defaults(**cfg)
    except UsageError as exc:
        print(f"segrank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"segrank: error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.task not in TASKS or args.mode not in MODES:
        print(f"segrank: error: invalid task/mode in config ({args.task!r}, {args.mode!r})",
              file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"segrank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError, SegrankError) as exc:
        print(f"segrank: fatal: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
