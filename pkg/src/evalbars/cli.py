"""``uq``: interval analyses of evaluation files and coverage simulations.

Examples::

    uq single --input evals.csv --methods clt,wilson,cp,bayes --level 0.95 --out report.json
    uq compare --input-a a.csv --input-b b.csv --metric diff --methods clt,bayes
    uq paired --input paired.csv --methods paired-clt,bayes-paired,bayes-unpaired --k 10000 --seed 7
    uq clustered --input clusters.csv --methods clt,clustered-clt,bayes-clustered
    uq confusion --input conf.csv --methods delta,bayes-qbi,bayes-hdi,bootstrap
    uq simulate --config sim.cfg --out-dir results/
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from evalbars import __version__
from evalbars import intervals_clustered as icl
from evalbars import intervals_compare as icmp
from evalbars import intervals_single as isg
from evalbars import metrics_confusion as mc
from evalbars.errors import ConfigurationError, EvalbarsError, IngestError, UndefinedMetricError
from evalbars.interval import Interval
from evalbars.io import ingest
from evalbars.simharness import load_config, run_coverage_experiment
from evalbars.simharness.config import PROFILES
from evalbars.statfn import RngStream

SUBCOMMANDS = ("single", "compare", "paired", "clustered", "confusion", "simulate")
REPORT_FIELDS = ("subject", "method", "level", "lower", "upper", "width", "point_estimate", "diagnostics")


class UsageError(ConfigurationError):
    """A method or option does not fit the chosen subcommand."""


@dataclass(frozen=True)
class AnalysisRequest:
    subcommand: str
    inputs: tuple[str, ...]
    methods: tuple[str, ...]
    levels: tuple[float, ...] = (0.95,)
    k: int | None = None
    seed: int = 0
    fmt: str = "json"
    metric: str = "diff"

    def __post_init__(self) -> None:
        if self.subcommand not in SUBCOMMANDS[:-1]:
            raise UsageError(f"unknown analysis subcommand {self.subcommand!r}")
        if not self.levels or any(not 0.0 < lv < 1.0 for lv in self.levels):
            raise UsageError("levels must lie strictly inside (0, 1)")
        if self.fmt not in ("json", "csv"):
            raise UsageError(f"unknown output format {self.fmt!r}")
        if self.k is not None and self.k < 1:
            raise UsageError("--k must be positive")
        for p in self.inputs:
            if not Path(p).is_file():
                raise IngestError("file not found", path=p)


# Each method takes (data, level, k_override, stream) and returns an Interval.
Method = Callable[[Any, float, "int | None", RngStream], Interval]


def _k(k: int | None, default: int) -> int:
    return default if k is None else k


def _first(result):
    return result[0] if isinstance(result, tuple) else result


SINGLE_METHODS: dict[str, Method] = {
    "clt": lambda y, lv, k, s: isg.clt_interval(y, lv),
    "t": lambda y, lv, k, s: isg.t_interval(y, lv),
    "wilson": lambda y, lv, k, s: isg.wilson_interval(y, lv),
    "cp": lambda y, lv, k, s: isg.clopper_pearson_interval(y, lv),
    "bootstrap": lambda y, lv, k, s: isg.bootstrap_interval(y, lv, _k(k, isg.DEFAULT_BOOTSTRAP_K), s),
    "bayes": lambda y, lv, k, s: isg.bayes_beta_interval(y, lv),
}

COMPARE_METHODS: dict[str, dict[str, Method]] = {
    "diff": {
        "clt": lambda p, lv, k, s: icmp.clt_diff_interval(p[0], p[1], lv),
        "bayes": lambda p, lv, k, s: icmp.bayes_independent_comparison(
            p[0], p[1], lv, "difference", _k(k, icmp.DEFAULT_POSTERIOR_K), s
        )[0],
    },
    "or": {
        "fisher": lambda p, lv, k, s: icmp.fisher_exact_or_interval(p[0], p[1], lv),
        "bayes": lambda p, lv, k, s: icmp.bayes_independent_comparison(
            p[0], p[1], lv, "odds_ratio", _k(k, icmp.DEFAULT_POSTERIOR_K), s
        )[0],
    },
}

PAIRED_METHODS: dict[str, Method] = {
    "paired-clt": lambda d, lv, k, s: icmp.paired_clt_interval(d, lv),
    "clt-diff": lambda d, lv, k, s: icmp.clt_diff_interval(d.y_a, d.y_b, lv),
    "bayes-paired": lambda d, lv, k, s: icmp.bayes_paired_diff(d, lv, _k(k, icmp.DEFAULT_IS_K), s)[0],
    "bayes-unpaired": lambda d, lv, k, s: icmp.bayes_independent_comparison(
        d.y_a, d.y_b, lv, "difference", _k(k, icmp.DEFAULT_POSTERIOR_K), s
    )[0],
}

CLUSTERED_METHODS: dict[str, Method] = {
    "clt": lambda d, lv, k, s: isg.clt_interval(d.flatten(), lv),
    "clustered-clt": lambda d, lv, k, s: icl.clustered_clt_interval(d, lv),
    "wilson": lambda d, lv, k, s: isg.wilson_interval(d.flatten(), lv),
    "cp": lambda d, lv, k, s: isg.clopper_pearson_interval(d.flatten(), lv),
    "bayes": lambda d, lv, k, s: isg.bayes_beta_interval(d.flatten(), lv),
    "bayes-clustered": lambda d, lv, k, s: icl.bayes_clustered_interval(d, lv, _k(k, icl.DEFAULT_IS_K), s)[0],
}

CONFUSION_METHODS: dict[str, Method] = {
    "delta": lambda c, lv, k, s: mc.f1_delta_interval(c, lv),
    "bayes-qbi": lambda c, lv, k, s: mc.bayes_f1_interval(c, lv, _k(k, mc.DEFAULT_POSTERIOR_K), s, "quantile")[0],
    "bayes-hdi": lambda c, lv, k, s: mc.bayes_f1_interval(c, lv, _k(k, mc.DEFAULT_POSTERIOR_K), s, "hdi")[0],
    "bootstrap": lambda c, lv, k, s: mc.bootstrap_f1_interval(c, lv, _k(k, mc.DEFAULT_BOOTSTRAP_K), s),
}

DEFAULT_METHODS = {
    "single": ("clt", "wilson", "cp", "bayes"),
    "compare:diff": ("clt", "bayes"),
    "compare:or": ("fisher", "bayes"),
    "paired": ("paired-clt", "bayes-paired", "bayes-unpaired"),
    "clustered": ("clt", "clustered-clt", "bayes-clustered"),
    "confusion": ("delta", "bayes-qbi", "bayes-hdi", "bootstrap"),
}


def _method_table(req: AnalysisRequest) -> dict[str, Method]:
    if req.subcommand == "compare":
        if req.metric not in COMPARE_METHODS:
            raise UsageError(f"--metric must be diff or or, got {req.metric!r}")
        # clt only exists for the difference and fisher only for the odds
        # ratio, so they keep their own estimand; bayes follows --metric.
        return {
            "clt": COMPARE_METHODS["diff"]["clt"],
            "fisher": COMPARE_METHODS["or"]["fisher"],
            "bayes": COMPARE_METHODS[req.metric]["bayes"],
        }
    return {
        "single": SINGLE_METHODS,
        "paired": PAIRED_METHODS,
        "clustered": CLUSTERED_METHODS,
        "confusion": CONFUSION_METHODS,
    }[req.subcommand]


def _record_metric(req: AnalysisRequest, method: str) -> str:
    if req.subcommand != "compare":
        return "diff"
    return {"clt": "diff", "fisher": "or"}.get(method, req.metric)


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def _point(req: AnalysisRequest, data, metric: str = "diff") -> float | None:
    if req.subcommand == "single":
        return data.mean if data.N else None
    if req.subcommand == "compare":
        ya, yb = data
        pa, pb = ya.mean, yb.mean
        if metric == "diff":
            return pa - pb
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (pa / (1.0 - pa)) / (pb / (1.0 - pb)) if (pa < 1 and pb > 0) else math.inf
        return ratio
    if req.subcommand == "paired":
        return float(np.mean(data.differences)) if data.N else None
    if req.subcommand == "clustered":
        return data.S / data.N
    try:
        return mc.f1_point(data)
    except UndefinedMetricError:
        return None


def _subject(req: AnalysisRequest, metric: str = "diff") -> str:
    if req.subcommand in ("compare", "paired"):
        return "A/B" if metric == "or" else "A-B"
    return "model"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def load_inputs(req: AnalysisRequest):
    if req.subcommand == "compare":
        if len(req.inputs) != 2:
            raise UsageError("compare needs --input-a and --input-b")
        return (ingest(req.inputs[0], "single"), ingest(req.inputs[1], "single"))
    if len(req.inputs) != 1:
        raise UsageError(f"{req.subcommand} takes exactly one --input")
    return ingest(req.inputs[0], req.subcommand)


def run_analysis(req: AnalysisRequest, data=None) -> dict:
    """Compute every (method, level) interval for ``req`` and return the report document."""
    table = _method_table(req)
    unknown = [m for m in req.methods if m not in table]
    if unknown:
        raise UsageError(f"unknown method(s) {unknown} for {req.subcommand}; choose from {sorted(table)}")
    if data is None:
        data = load_inputs(req)
    root = RngStream(req.seed).child("analysis", req.subcommand)
    records = []
    for name in req.methods:
        stream = root.child(name)
        metric = _record_metric(req, name)
        point = _point(req, data, metric)
        for level in req.levels:
            interval = table[name](data, level, req.k, stream)
            records.append(
                {
                    "subject": _subject(req, metric),
                    "method": name,
                    "level": level,
                    "lower": interval.lower,
                    "upper": interval.upper,
                    "width": interval.width,
                    "point_estimate": point,
                    "diagnostics": interval.diagnostics,
                }
            )
    doc: dict[str, Any] = {
        "subcommand": req.subcommand,
        "inputs": list(req.inputs),
        "seed": req.seed,
        "records": records,
    }
    if req.subcommand == "compare":
        doc["metric"] = req.metric
        k = _k(req.k, icmp.DEFAULT_POSTERIOR_K)
        doc["prob_A_beats_B"] = icmp.prob_A_beats_B(data[0], data[1], k, root.child("prob_A_beats_B"))
    elif req.subcommand == "paired":
        k = _k(req.k, icmp.DEFAULT_IS_K)
        doc["prob_A_beats_B"] = icmp.paired_prob_A_beats_B(data, k, root.child("prob_A_beats_B"))
    return _jsonable(doc)


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for rec in doc["records"]:
        row = [rec[f] for f in REPORT_FIELDS[:-1]]
        row = ["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row]
        writer.writerow(row + [json.dumps(rec["diagnostics"], sort_keys=True)])
    return buf.getvalue()


def _split(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _levels_arg(args) -> tuple[float, ...]:
    if args.levels:
        try:
            return tuple(float(x) for x in _split(args.levels))
        except ValueError:
            raise UsageError(f"bad --levels value {args.levels!r}") from None
    return (args.level,)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uq", description="Confidence and credible intervals for small evaluations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--methods", help="comma-separated method tags")
        p.add_argument("--level", type=float, default=0.95, help="nominal level 1 - alpha (default 0.95)")
        p.add_argument("--levels", help="comma-separated levels; overrides --level")
        p.add_argument("--k", type=int, default=None, help="draws/resamples for sampling methods")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
        p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("single", help="one model, IID binary outcomes")
    p.add_argument("--input", required=True)
    common(p)
    p = sub.add_parser("compare", help="two models on independent question sets")
    p.add_argument("--input-a", required=True)
    p.add_argument("--input-b", required=True)
    p.add_argument("--metric", choices=("diff", "or"), default="diff")
    common(p)
    for name, help_text in (
        ("paired", "two models on the same questions"),
        ("clustered", "one model, clustered questions"),
        ("confusion", "F1 from a confusion matrix"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True)
        common(p)
    p = sub.add_parser("simulate", help="run a coverage experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--profile", choices=tuple(PROFILES), default=None, help="override draw/dataset counts")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: UQ_THREADS or 1)")
    return parser


def request_from_args(args) -> AnalysisRequest:
    if args.subcommand == "compare":
        inputs = (args.input_a, args.input_b)
        key = f"compare:{args.metric}"
        metric = args.metric
    else:
        inputs = (args.input,)
        key = args.subcommand
        metric = "diff"
    return AnalysisRequest(
        subcommand=args.subcommand,
        inputs=inputs,
        methods=_split(args.methods) or DEFAULT_METHODS[key],
        levels=_levels_arg(args),
        k=args.k,
        seed=args.seed,
        fmt=args.fmt,
        metric=metric,
    )


def run_simulation(args, stdout) -> int:
    from dataclasses import replace

    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if args.profile is not None:
        draws, datasets = PROFILES[args.profile]
        config = replace(config, n_param_draws=draws, n_datasets_per_draw=datasets)
    report = run_coverage_experiment(config, threads=args.threads)
    csv_path, json_path = report.write(args.out_dir)
    stdout.write(f"coverage error ({config.setting}, {report.rows[0].reps} replicates per cell)\n")
    stdout.write(report.summary_table() + "\n")
    stdout.write(f"wrote {csv_path}\nwrote {json_path}\n")
    return 0


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "simulate":
            return run_simulation(args, stdout)
        req = request_from_args(args)
        text = render(run_analysis(req), req.fmt)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            stdout.write(text)
        return 0
    except (ConfigurationError, IngestError) as exc:
        stderr.write(f"uq: error: {exc}\n")
        return 2
    except EvalbarsError as exc:
        stderr.write(f"uq: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
