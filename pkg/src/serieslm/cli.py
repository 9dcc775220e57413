"""Command-line front end: test a dataset, run simulations, tune series sizes.

Configuration comes from a JSON file (key/value with nesting) with flags
taking precedence; every command is deterministic given --seed.  Exit codes:
0 on completion (a rejection is not an error), 2 on input problems, 3 on
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

import numpy as np

from .bootstrap import MULTIPLIERS, wild_bootstrap
from .design import ModelSpec, build_partially_linear, screen_collinear
from .errors import (
    DesignError,
    InputError,
    RankDeficiencyError,
    SeriesLMError,
    SingularMomentMatrixError,
)
from .lmtest import VARIANTS, run_test
from .mc import MC_VARIANTS, McConfig, emit_report, run_mc
from .tuning import CRITERIA, TuningGrid, data_driven_test

__all__ = ["Dataset", "load_csv", "main"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


@dataclass(frozen=True)
class Dataset:
    """Rectangular, all-numeric, named columns."""

    columns: dict
    n: int
    source: str

    def __getitem__(self, name):
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns


def load_csv(path) -> Dataset:
    """Strict CSV reader: header row, comma-separated, every cell numeric."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        names = [h.strip() for h in header]
        if len(set(names)) != len(names):
            raise InputError(f"{path}: duplicate column names")
        data = [[] for _ in names]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise InputError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(names)}"
                )
            for j, cell in enumerate(row):
                try:
                    val = float(cell)
                except ValueError:
                    raise InputError(
                        f"{path}: line {lineno}, column {names[j]!r}: "
                        f"non-numeric value {cell!r}"
                    ) from None
                if not np.isfinite(val):
                    raise InputError(
                        f"{path}: line {lineno}, column {names[j]!r}: "
                        "missing or non-finite value"
                    )
                data[j].append(val)
    n = len(data[0]) if data else 0
    if n < 2:
        raise InputError(f"{path}: need at least 2 data rows, found {n}")
    cols = {name: np.asarray(vals) for name, vals in zip(names, data)}
    return Dataset(columns=cols, n=n, source=str(path))


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot open config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc


def _rescale_columns(dataset: Dataset, names) -> Dataset:
    cols = dict(dataset.columns)
    for name in names:
        if name not in cols:
            raise InputError(f"variable {name!r} not in dataset")
        v = cols[name]
        lo, hi = float(v.min()), float(v.max())
        if hi == lo:
            raise InputError(f"variable {name!r} is constant; cannot rescale")
        cols[name] = 2.0 * (v - lo) / (hi - lo) - 1.0
    return Dataset(columns=cols, n=dataset.n, source=dataset.source)


def _model_variables(spec: ModelSpec):
    names = list(spec.linear_vars) + [v for v, _ in spec.series_vars]
    for v, _ in spec.alternative.basis:
        if v not in names:
            names.append(v)
    for term in spec.alternative.custom_terms:
        from .design import parse_term

        for v, _ in parse_term(term):
            if v not in names:
                names.append(v)
    return names


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _write_json(path, payload):
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_test(args) -> int:
    cfg = _load_config(args.config)
    if "model" not in cfg:
        raise InputError("config must contain a 'model' section")
    try:
        model = ModelSpec.from_dict(cfg["model"])
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad model config: {exc}") from exc

    y_name = cfg.get("y", args.y)
    if y_name is None:
        raise InputError("name the response column via config 'y' or --y")
    variant = args.variant or cfg.get("variant", "ols_short")
    if variant not in VARIANTS:
        raise InputError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    levels = tuple(args.alpha) if args.alpha else tuple(cfg.get("alpha", [0.05]))
    boot_cfg = dict(cfg.get("bootstrap", {}))
    if args.bootstrap is not None:
        boot_cfg["enabled"] = args.bootstrap > 0
        boot_cfg["draws"] = args.bootstrap
    if args.dist:
        boot_cfg["dist"] = args.dist
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    tune_cfg = dict(cfg.get("tuning", {}))

    dataset = load_csv(args.data)
    if y_name not in dataset:
        raise InputError(f"response column {y_name!r} not in dataset")
    if args.rescale or cfg.get("rescale", False):
        dataset = _rescale_columns(dataset, _model_variables(model))

    if tune_cfg.get("enabled", False):
        return _run_tuned_test(dataset, y_name, model, tune_cfg, levels, args.out)

    y = dataset[y_name]
    pair = build_partially_linear(dataset.columns, model)
    pair, dropped = screen_collinear(pair, tol=float(cfg.get("screen_tol", 1e-10)))
    if pair.r_n < 1:
        raise DesignError("no alternative columns survive screening")
    result = run_test(y, pair.w, pair.z, variant=variant, levels=levels)

    print(f"data: {dataset.source} (n = {dataset.n})")
    print(f"design: m_n = {pair.m_n}, r_n = {pair.r_n}, k_n = {pair.k_n}"
          + (f" (dropped collinear: {', '.join(dropped)})" if dropped else ""))
    print(f"variant = {result.variant}")
    print(f"statistic = {_fmt(result.statistic)}  t = {_fmt(result.t)}")
    print(f"p (normal rule) = {_fmt(result.p_normal)}   "
          f"p (chi-square rule) = {_fmt(result.p_chisq)}")
    for a in levels:
        nr = "reject" if result.reject_normal[a] else "no rejection"
        cr = "reject" if result.reject_chisq[a] else "no rejection"
        print(f"alpha = {a:g}: normal rule -> {nr}; chi-square rule -> {cr}")

    boot_payload = None
    if boot_cfg.get("enabled", False):
        if variant != "ols_short":
            raise InputError("the wild bootstrap is defined for the ols_short variant only")
        boot = wild_bootstrap(
            result.extras["fit"], result.extras["z_resid"], result.t,
            n_draws=int(boot_cfg.get("draws", 399)),
            dist=boot_cfg.get("dist", "rademacher"),
            seed=seed, levels=levels)
        boot_payload = {
            "p_value": boot.p_value,
            "n_draws": boot.n_draws,
            "n_failed": boot.n_failed,
            "dist": boot_cfg.get("dist", "rademacher"),
            "critical_values": {repr(a): v for a, v in boot.critical_values.items()},
            "reject": {repr(a): boot.reject(a) for a in levels},
        }
        print(f"bootstrap (B = {boot.n_draws}, {boot_payload['dist']}): "
              f"p = {_fmt(boot.p_value)}")

    _write_json(args.out, {
        "command": "test",
        "source": dataset.source,
        "n": dataset.n,
        "m_n": pair.m_n,
        "r_n": pair.r_n,
        "k_n": pair.k_n,
        "dropped_columns": list(dropped),
        "variant": result.variant,
        "statistic": result.statistic,
        "t": result.t,
        "p_normal": result.p_normal,
        "p_chisq": result.p_chisq,
        "reject_normal": {repr(a): v for a, v in result.reject_normal.items()},
        "reject_chisq": {repr(a): v for a, v in result.reject_chisq.items()},
        "bootstrap": boot_payload,
        "seed": seed,
    })
    return EXIT_OK


def _canonical_pl_roles(model: ModelSpec):
    if len(model.linear_vars) != 1 or len(model.series_vars) != 1:
        raise InputError(
            "tuning needs the canonical partially linear layout: exactly one "
            "linear variable and one series variable"
        )
    return model.linear_vars[0], model.series_vars[0][0], model.series_vars[0][1].family


def _run_tuned_test(dataset, y_name, model, tune_cfg, levels, out_path) -> int:
    x1, x2, family = _canonical_pl_roles(model)
    a_min = int(tune_cfg.get("a_min", 4))
    a_max = int(tune_cfg.get("a_max", 8))
    grid = TuningGrid(tuple(range(a_min, a_max + 1)), float(tune_cfg.get("c", 3.0)))
    criterion = tune_cfg.get("criterion", "cp")
    result = data_driven_test(dataset[y_name], dataset[x1], dataset[x2], grid,
                              family=family, levels=levels, criterion=criterion)
    _print_tuned(result, levels)
    _write_json(out_path, _tuned_payload(result, dataset, levels))
    return EXIT_OK


def _print_tuned(result, levels):
    print(f"criterion = {result.criterion}")
    print("candidates (a, m_n, r_n, rss, statistic):")
    for a, m_n, r_n, rss, stat in result.candidate_table:
        print(f"  a = {a}: m_n = {m_n}, r_n = {r_n}, "
              f"rss = {_fmt(rss)}, statistic = {_fmt(stat)}")
    print(f"selected null size a = {result.selected_a} "
          f"(r_min = {result.r_min}); selected restrictions r = {result.selected_r}")
    print(f"statistic = {_fmt(result.statistic)}   "
          f"p (chi-square, {result.r_min} df) = {_fmt(result.p_value)}")
    for a in levels:
        word = "reject" if result.reject[a] else "no rejection"
        print(f"alpha = {a:g}: {word}")


def _tuned_payload(result, dataset, levels):
    return {
        "command": "tune",
        "source": dataset.source,
        "n": dataset.n,
        "criterion": result.criterion,
        "selected_a": result.selected_a,
        "selected_r": result.selected_r,
        "r_min": result.r_min,
        "statistic": result.statistic,
        "p_value": result.p_value,
        "reject": {repr(a): v for a, v in result.reject.items()},
        "candidates": [
            {"a": a, "m_n": m, "r_n": r, "rss": rss, "statistic": stat}
            for a, m, r, rss, stat in result.candidate_table
        ],
    }


def cmd_tune(args) -> int:
    dataset = load_csv(args.data)
    for name in (args.y, args.x1, args.x2):
        if name not in dataset:
            raise InputError(f"column {name!r} not in dataset")
    grid = TuningGrid(tuple(range(args.a_min, args.a_max + 1)), args.c)
    levels = tuple(args.alpha) if args.alpha else (0.05,)
    result = data_driven_test(dataset[args.y], dataset[args.x1], dataset[args.x2],
                              grid, family=args.family, levels=levels,
                              criterion=args.criterion)
    _print_tuned(result, levels)
    _write_json(args.out, _tuned_payload(result, dataset, levels))
    return EXIT_OK


def cmd_simulate(args) -> int:
    variants = tuple(args.variants.split(","))
    config = McConfig(
        replications=args.reps,
        n_values=tuple(args.n) if args.n else (250,),
        a_values=tuple(range(args.a_min, args.a_max + 1)),
        families=tuple(args.family) if args.family else ("power",),
        variants=variants,
        hypotheses=tuple(args.hypotheses.split(",")),
        alphas=tuple(args.alpha) if args.alpha else (0.05,),
        seed=args.seed if args.seed is not None else 0,
        bootstrap_draws=args.bootstrap,
        bootstrap_dist=args.dist or "rademacher",
        threads=args.threads,
    )
    report = run_mc(config)
    csv_path = f"{args.out}.csv"
    plot_path = f"{args.out}.dat"
    emit_report(report, csv_path, plot_path)
    print(f"wrote {csv_path} and {plot_path}")
    width = max(len(v) for v in variants)
    for row in report.rows:
        print(f"{row.variant:<{width}}  {row.family:<6} n={row.n:<5} "
              f"a_n={row.a_n:<2} {row.hypothesis:<11} alpha={row.alpha:g} "
              f"rate={row.reject_rate:.3f} (se {row.mc_se:.3f})")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serieslm",
        description="Heteroskedasticity-robust series LM specification tests",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run the specification test on a CSV dataset")
    p_test.add_argument("--data", required=True, help="CSV file (header row, numeric)")
    p_test.add_argument("--config", required=True, help="JSON run configuration")
    p_test.add_argument("--y", help="response column (overrides config)")
    p_test.add_argument("--variant", choices=VARIANTS, help="statistic variant")
    p_test.add_argument("--alpha", type=float, action="append",
                        help="test level; repeatable")
    p_test.add_argument("--bootstrap", type=int, default=None, metavar="B",
                        help="wild bootstrap draws (0 disables)")
    p_test.add_argument("--dist", choices=MULTIPLIERS, help="bootstrap multiplier")
    p_test.add_argument("--seed", type=int, default=None)
    p_test.add_argument("--rescale", action="store_true",
                        help="min-max rescale model variables to [-1, 1]")
    p_test.add_argument("--out", help="write a JSON result file")
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser("simulate", help="Monte Carlo size/power study")
    p_sim.add_argument("--reps", type=int, required=True, help="replications per cell")
    p_sim.add_argument("--n", type=int, action="append", help="sample size; repeatable")
    p_sim.add_argument("--a-min", type=int, default=4)
    p_sim.add_argument("--a-max", type=int, default=8)
    p_sim.add_argument("--family", action="append", choices=("power", "spline"))
    p_sim.add_argument("--variants", default="ols_short",
                       help=f"comma list from {','.join(MC_VARIANTS)}")
    p_sim.add_argument("--hypotheses", default="null,alternative")
    p_sim.add_argument("--alpha", type=float, action="append")
    p_sim.add_argument("--bootstrap", type=int, default=399, metavar="B")
    p_sim.add_argument("--dist", choices=MULTIPLIERS)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--out", required=True, help="output path prefix")
    p_sim.set_defaults(func=cmd_simulate)

    p_tune = sub.add_parser("tune", help="data-driven series sizes on a dataset")
    p_tune.add_argument("--data", required=True)
    p_tune.add_argument("--y", required=True, help="response column")
    p_tune.add_argument("--x1", required=True, help="linear regressor column")
    p_tune.add_argument("--x2", required=True, help="series regressor column")
    p_tune.add_argument("--family", choices=("power", "spline"), default="power")
    p_tune.add_argument("--a-min", type=int, default=4)
    p_tune.add_argument("--a-max", type=int, default=8)
    p_tune.add_argument("--criterion", choices=CRITERIA, default="cp")
    p_tune.add_argument("--c", type=float, default=3.0)
    p_tune.add_argument("--alpha", type=float, action="append")
    p_tune.add_argument("--out", help="write a JSON result file")
    p_tune.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    from ._malloc import prefer_heap_reuse

    prefer_heap_reuse()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DesignError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RankDeficiencyError, SingularMomentMatrixError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SeriesLMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
