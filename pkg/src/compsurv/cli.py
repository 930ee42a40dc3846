"""Command-line front end.

Exit codes: 0 success, 1 data/model/runtime error, 2 usage or configuration
error. All randomness flows from ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import BAYESIAN, KAPLAN_MEIER
from .composite import (
    GLOBAL,
    PER_MEMBER,
    fit,
    load_model,
    predict_dataset,
    save_model,
)
from .dataset import Schema, kfold_indices, one_hot_encode, read_table, split_indices, write_csv
from .errors import CompositeSurvivalError
from .metrics import DEFAULT_AUC_GRID, EvalProtocol, evaluate
from .scores import ClassifierConfig
from .synth import SynthConfig, synth_generate

log = logging.getLogger("compsurv")

BASELINES = {"bayes": BAYESIAN, "km": KAPLAN_MEIER}
ROW_LABELS = {"bayes": "BS", "km": "BS w/KM"}


class ConfigError(Exception):
    """Invalid flag combination or value (exit code 2)."""


# ----------------------------------------------------------------------------
# helpers


def _split_list(value: str | None) -> tuple[str, ...]:
    if not value:
        return ()
    return tuple(v.strip() for v in value.split(",") if v.strip())


def parse_auc_grid(spec: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop included, appended if off-step) or ``a,b,c``."""
    try:
        if ":" in spec:
            start, stop, step = (float(x) for x in spec.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            pts = list(np.arange(start, stop + 1e-9, step))
            if not np.isclose(pts[-1], stop):
                pts.append(stop)
            return tuple(float(p) for p in pts)
        pts = tuple(float(x) for x in spec.split(","))
        if not pts:
            raise ValueError
        return pts
    except ValueError:
        raise ConfigError(f"invalid --auc-grid {spec!r}; use start:stop:step or a,b,c") from None


def run_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg["tool_version"] = __version__
    return cfg


def _schema(args, duration=None, event=None) -> Schema:
    return Schema(
        duration=duration if duration is not None else args.duration,
        event=event if event is not None else args.event,
        covariates=_split_list(args.covariates) or None,
        categorical=_split_list(args.categorical),
    )


def _classifier(args) -> ClassifierConfig:
    cfg = ClassifierConfig(lr=args.lr, max_iters=args.iters, l2=args.l2, tol=args.tol)
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _dump_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt(v) -> str:
    return "nan" if v is None else f"{v:.3f}"


# ----------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    classifier = _classifier(args)
    if args.split is not None and not 0.0 < args.split < 1.0:
        raise ConfigError("--split must lie in (0, 1)")
    schema = _schema(args)
    table = read_table(args.data, schema)
    if args.split is not None:
        train_idx, test_idx = split_indices(len(table), args.split, args.seed)
        if args.test_out:
            raw = table.iloc[test_idx]
            raw.to_csv(args.test_out, index=False, float_format="%.17g", lineterminator="\n")
        table = table.iloc[train_idx]
    ds = one_hot_encode(table, schema)
    config = run_config(args)
    config["schema"] = {
        "duration": schema.duration,
        "event": schema.event,
        "covariates": list(schema.covariates) if schema.covariates else None,
        "categorical": list(schema.categorical),
    }
    model = fit(
        ds,
        BASELINES[args.baseline],
        classifier,
        raw_baseline=args.raw_baseline,
        curve_normalization=args.normalization,
        config=config,
    )
    save_model(model, args.out)
    print(
        f"N={len(ds)} J={model.grid.horizon} censored={100 * ds.censored_fraction:.1f}% "
        f"baseline={model.baseline_kind} covariates={ds.n_covariates} -> {args.out}"
    )
    return 0


def _model_schema(args, model) -> Schema:
    saved = model.config.get("schema", {})
    prep = model.preprocessing
    return Schema(
        duration=args.duration or saved.get("duration") or "duration",
        event=args.event or saved.get("event") or "event",
        covariates=_split_list(args.covariates) or prep.source_columns,
        categorical=_split_list(args.categorical) or tuple(prep.categories),
    )


def cmd_evaluate(args) -> int:
    protocol = EvalProtocol(auc_grid=parse_auc_grid(args.auc_grid), ties=args.ties)
    model = load_model(args.model)
    schema = _model_schema(args, model)
    table = read_table(args.data, schema)
    test = one_hot_encode(table, schema, model.preprocessing.categories)
    report = evaluate(model, test, protocol)
    report.config = run_config(args)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(
        f"C={report.c_index:.3f} IBS={report.ibs:.3f} "
        f"meanAUC={_fmt(report.mean_auc['as_written'])} "
        f"(unsquared {_fmt(report.mean_auc['unsquared'])})"
    )
    return 0


def _summary(values: list) -> dict:
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    arr = np.asarray(vals, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "n": int(arr.size)}


def cross_validate(args) -> dict:
    if args.k < 2:
        raise ConfigError("--k must be at least 2")
    classifier = _classifier(args)
    protocol = EvalProtocol(auc_grid=parse_auc_grid(args.auc_grid), ties=args.ties)
    schema = _schema(args)
    table = read_table(args.data, schema)
    ds = one_hot_encode(table, schema)
    if args.k > len(ds):
        raise ConfigError(f"--k {args.k} exceeds the number of records ({len(ds)})")
    kinds = ["bayes", "km"] if args.baseline == "both" else [args.baseline]
    folds = kfold_indices(len(ds), args.k, args.seed)
    results: dict[str, list[dict]] = {k: [] for k in kinds}
    for i, (tr, te) in enumerate(folds):
        train, test = ds.subset(tr), ds.subset(te)
        for kind in kinds:
            model = fit(
                train,
                BASELINES[kind],
                classifier,
                raw_baseline=args.raw_baseline,
                curve_normalization=args.normalization,
            )
            rep = evaluate(model, test, protocol)
            results[kind].append(
                {
                    "fold": i,
                    "n_train": len(train),
                    "n_test": len(test),
                    "c_index": rep.c_index,
                    "ibs": rep.ibs,
                    "mean_auc": rep.mean_auc,
                }
            )
            log.info("fold %d %s C=%.4f IBS=%.4f", i, kind, rep.c_index, rep.ibs)
    rows = {}
    for kind in kinds:
        per = results[kind]
        rows[ROW_LABELS[kind]] = {
            "baseline": BASELINES[kind],
            "c_index": _summary([r["c_index"] for r in per]),
            "ibs": _summary([r["ibs"] for r in per]),
            "mean_auc_as_written": _summary([r["mean_auc"]["as_written"] for r in per]),
            "mean_auc_unsquared": _summary([r["mean_auc"]["unsquared"] for r in per]),
            "folds": per,
        }
    return {"tool_version": __version__, "config": run_config(args), "k": args.k, "rows": rows}


def _pm(s: dict) -> str:
    if s["mean"] is None:
        return "n/a"
    return f"{s['mean']:.3f} ± {s['std']:.3f}"


def cmd_cv(args) -> int:
    agg = cross_validate(args)
    _dump_json(agg, args.out)
    stream = sys.stderr if not args.out else sys.stdout
    print(f"{'Method':<10} {'C-index':>16} {'IBS':>16} {'meanAUC':>16}", file=stream)
    for label, row in agg["rows"].items():
        print(
            f"{label:<10} {_pm(row['c_index']):>16} {_pm(row['ibs']):>16} "
            f"{_pm(row['mean_auc_as_written']):>16}",
            file=stream,
        )
    return 0


def cmd_curves(args) -> int:
    model = load_model(args.model)
    saved = _model_schema(args, model)
    # member files need only the covariates
    header = read_table_header(args.data)
    schema = Schema(
        duration=saved.duration if saved.duration in header else None,
        event=saved.event if saved.event in header else None,
        covariates=saved.covariates,
        categorical=saved.categorical,
    )
    table = read_table(args.data, schema)
    ds = one_hot_encode(table, schema, model.preprocessing.categories)
    if args.id_column:
        ids = read_column(args.data, args.id_column)
    else:
        ids = [str(i) for i in range(len(ds))]
    curves = predict_dataset(model, ds, ids)
    steps = model.grid.steps.tolist()
    cfg = run_config(args)

    if args.format == "json":
        _dump_json(
            {
                "tool_version": __version__,
                "config": cfg,
                "times": steps,
                "member_ids": list(curves.member_ids),
                "survival": curves.values.tolist(),
                "baseline": model.baseline.survival.tolist(),
            },
            args.out,
        )
        return 0

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        fh.write(f"# compsurv {__version__}\n")
        fh.write(f"# config {json.dumps(cfg, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["member_id", "time", "survival"])
        for mid, row in zip(curves.member_ids, curves.values):
            for t, v in zip(steps, row):
                w.writerow([mid, t, repr(float(v))])
        for t, v in zip(steps, model.baseline.survival):
            w.writerow(["__baseline__", t, repr(float(v))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def read_table_header(path) -> list[str]:
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                return next(csv.reader([line]))
    return []


def read_column(path, name) -> list[str]:
    import pandas as pd

    df = pd.read_csv(path, dtype=str, keep_default_na=False, comment="#")
    if name not in df.columns:
        raise CompositeSurvivalError(f"id column {name!r} not found")
    return df[name].tolist()


def cmd_synth(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    if not 0.0 <= args.censoring < 1.0:
        raise ConfigError("--censoring must lie in [0, 1)")
    cfg = SynthConfig(
        n=args.n,
        n_covariates=args.n_covariates,
        hazard=args.hazard,
        rate=args.rate,
        coef=tuple(float(c) for c in _split_list(args.coef)) or None,
        censoring_rate=args.censoring,
        seed=args.seed,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ds = synth_generate(cfg)
    comment = f"compsurv {__version__}\nconfig {json.dumps(run_config(args), sort_keys=True)}"
    write_csv(ds, args.out, "duration", "event", header_comment=comment)
    print(f"N={len(ds)} censored={100 * ds.censored_fraction:.1f}% -> {args.out}")
    return 0


# ----------------------------------------------------------------------------
# parser


def _add_data(p, required_roles: bool) -> None:
    p.add_argument("--data", required=True, help="input CSV (header row required)")
    p.add_argument("--duration", required=required_roles, default=None, help="duration column")
    p.add_argument("--event", required=required_roles, default=None, help="event column (0/1)")
    p.add_argument("--covariates", default=None, help="comma list; default: all other columns")
    p.add_argument("--categorical", default=None, help="comma list of categorical columns")


def _add_fit_opts(p, allow_both: bool = False) -> None:
    choices = ["bayes", "km", "both"] if allow_both else ["bayes", "km"]
    p.add_argument("--baseline", choices=choices, default="bayes")
    p.add_argument("--raw-baseline", action="store_true", help="skip envelope and rescale")
    p.add_argument(
        "--normalization", choices=[PER_MEMBER, GLOBAL], default=PER_MEMBER,
        help="divide each curve by its own max or by the matrix max",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-8)


def _add_eval_opts(p) -> None:
    default = f"{DEFAULT_AUC_GRID[0]}:{DEFAULT_AUC_GRID[-1]}:7"
    p.add_argument("--auc-grid", default=default, help="start:stop:step or a,b,c")
    p.add_argument("--ties", choices=["le", "half"], default="le", help="AUC tie credit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compsurv", description="Composite survival analysis: fit, evaluate, curves."
    )
    parser.add_argument("--version", action="version", version=f"compsurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a composite model and write it as JSON")
    _add_data(p, required_roles=True)
    _add_fit_opts(p)
    p.add_argument("--split", type=float, default=None, help="train on this seeded fraction")
    p.add_argument("--test-out", default=None, help="write the held-out rows here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score a model on a labelled CSV")
    p.add_argument("--model", required=True)
    _add_data(p, required_roles=False)
    _add_eval_opts(p)
    p.add_argument("--out", default=None, help="report JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", help="k-fold cross-validation with mean ± std summary")
    _add_data(p, required_roles=True)
    _add_fit_opts(p, allow_both=True)
    _add_eval_opts(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", default=None, help="aggregate JSON path (stdout if omitted)")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("curves", help="emit per-member survival curves")
    p.add_argument("--model", required=True)
    _add_data(p, required_roles=False)
    p.add_argument("--id-column", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("synth", help="write a synthetic right-censored cohort")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--n-covariates", type=int, default=3)
    p.add_argument("--hazard", choices=["exponential", "piecewise"], default="exponential")
    p.add_argument("--rate", type=float, default=0.1)
    p.add_argument("--coef", default=None, help="comma list of log-hazard effects")
    p.add_argument("--censoring", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("COMPOSITE_SURV_LOG", "error").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(message)s"
    )
    logging.captureWarnings(True)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"compsurv: error: {exc}", file=sys.stderr)
        return 2
    except (CompositeSurvivalError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"compsurv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
