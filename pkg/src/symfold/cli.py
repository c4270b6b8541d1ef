"""Command line entry point: ``symfold simulate | fit | transform``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import SymfoldError
from .estimators import HUBER_TUNING
from .io import fmt, load_csv, read_direction, write_csv
from .numerics import ranks
from .pipelines import DEFAULT_MAX_ITER, DEFAULT_TOL, quadratic_direction_fit
from .simulation import (
    METHODS,
    MethodConfig,
    ModelSpec,
    default_workers,
    estimate,
    resolve_methods,
    run_cell,
    table,
)
from .transforms import DEFAULT_NEIGHBORS, local_mean_at_center, transform_predictors, transform_response

log = logging.getLogger("symfold")

SIMULATE_COLUMNS = [
    "method", "n", "p", "metric1_mean", "metric1_sd", "metric2_mean", "metric2_sd", "replications", "failures",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # one diagnostic line, no usage dump
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_estimator_flags(p):
    p.add_argument("--H", type=int, default=None, help="number of slices for SIR/SAVE (default max(8, p+3))")
    p.add_argument("--m", type=int, default=DEFAULT_NEIGHBORS, help="neighbours for the local mean (default 10)")
    p.add_argument("--tuning", type=float, default=HUBER_TUNING, help="Huber tuning constant (default 1.345)")
    p.add_argument("--trim", type=float, default=0.10, help="Cook's distance trim fraction (default 0.10)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="iteration tolerance on 1 - cor^2 (default 0.001)")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="maximum iterations (default 10)")


def _config(args) -> MethodConfig:
    return MethodConfig(H=args.H, m=args.m, tuning=args.tuning, trim=args.trim, tol=args.tol, max_iter=args.max_iter)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symfold", description="Dimension reduction with symmetric-dependency folding.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="Monte Carlo comparison of estimators")
    sim.add_argument("--model", type=int, required=True, choices=[1, 2, 3, 4])
    sim.add_argument("--n", type=_int_list, required=True, help="sample size(s), comma separated")
    sim.add_argument("--p", type=_int_list, default=None, help="dimension(s), comma separated")
    sim.add_argument("--method", required=True, help="method name, comma list, or preset all-table1..4")
    sim.add_argument("--reps", type=int, default=500)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=None, help="worker processes (default: $SYMFOLD_THREADS or cores)")
    sim.add_argument("--output", default="-", help="output file, '-' for stdout")
    sim.add_argument("--format", choices=["csv", "json"], default="csv")
    sim.add_argument("--log", default=None, help="write per-replication scores as JSON lines")
    _add_estimator_flags(sim)

    fit = sub.add_parser("fit", help="estimate directions for a CSV data set")
    _add_data_flags(fit)
    fit.add_argument("--method", required=True, help="registered method, e.g. OLS, PHD, M1, two-dir-rr-m1")
    fit.add_argument("--directions", type=int, default=None, help="number of directions (default 1, 2 for two-dir)")
    fit.add_argument("--response-transform", choices=["none", "sqrt", "rank"], default="none")
    fit.add_argument("--quadratic", action="store_true", help="fit y on projections and their squares")
    fit.add_argument("--out-dir", required=True)
    _add_estimator_flags(fit)

    tr = sub.add_parser("transform", help="write folded responses/predictors")
    _add_data_flags(tr)
    tr.add_argument("--direction-file", default=None)
    tr.add_argument("--direction-method", default=None, help="estimate the folding direction with this method")
    tr.add_argument("--which", choices=["response", "predictors", "both"], default="both")
    tr.add_argument("--out-dir", required=True)
    _add_estimator_flags(tr)
    return parser


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--response", default="0", help="response column name or 0-based index (default 0)")


# -- simulate ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    methods = resolve_methods(args.method)
    config = _config(args)
    workers = args.threads if args.threads is not None else default_workers()
    ps = args.p or [None]
    cells = []
    for p in ps:
        for n in args.n:
            spec = ModelSpec.create(args.model, n, p, seed=args.seed)
            for method in methods:
                log.info("model %d, %s, n=%d, p=%d", args.model, method, spec.n, spec.p)
                cells.append(run_cell(spec, method, args.reps, config, workers=workers))
    report = table(cells)
    ordered = [row["cells"][col] for row in report["rows"] for col in report["columns"] if col in row["cells"]]
    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    try:
        if args.format == "csv":
            write_csv(out, SIMULATE_COLUMNS, (_summary_row(c) for c in ordered))
        else:
            json.dump([_summary_dict(c) for c in ordered], out, indent=2)
            out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.log:
        with open(args.log, "w") as fh:
            for c in ordered:
                for rep, row in enumerate(c.scores):
                    rec = {"method": c.method, "n": c.n, "p": c.p, "replication": rep,
                           "scores": [None if np.isnan(s) else float(fmt(s)) for s in row]}
                    fh.write(json.dumps(rec) + "\n")
    return 0


def _summary_row(c):
    m2 = (c.means[1], c.sds[1]) if len(c.means) > 1 else (None, None)
    return [c.method, c.n, c.p, c.means[0], c.sds[0], m2[0], m2[1], c.replications, c.failures]


def _summary_dict(c):
    return {
        "method": c.method, "model": c.model, "n": c.n, "p": c.p,
        "means": [float(fmt(x)) if np.isfinite(x) else None for x in c.means],
        "sds": [float(fmt(x)) if np.isfinite(x) else None for x in c.sds],
        "replications": c.replications, "failures": c.failures,
        "single_replication": c.single_replication, "unreliable": c.unreliable,
    }


# -- fit --------------------------------------------------------------------


def _load(args):
    loaded = load_csv(args.data, args.response)
    log.info("loaded %s: n=%d, p=%d, response %s", args.data, loaded.data.n, loaded.data.p, loaded.response)
    return loaded


def cmd_fit(args) -> int:
    loaded = _load(args)
    data = loaded.data
    if args.response_transform == "sqrt":
        if np.any(data.y < 0):
            raise ValueError("sqrt response transform needs a non-negative response")
        data = data.with_response(np.sqrt(data.y))
    elif args.response_transform == "rank":
        data = data.with_response(ranks(data.y))
    if args.method not in METHODS:
        raise ValueError(f"unknown method {args.method!r}")
    q = args.directions or (METHODS[args.method].max_directions or 1)
    dirs = estimate(args.method, data, q, _config(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    labels = [f"dir{k + 1}" for k in range(dirs.shape[1])]
    write_csv(out / "directions.csv", ["predictor"] + labels,
              ([name] + list(row) for name, row in zip(loaded.predictors, dirs)))
    proj = data.X @ dirs
    write_csv(out / "essp.csv", ["obs"] + [f"proj{k + 1}" for k in range(dirs.shape[1])] + ["response"],
              ([i + 1] + list(u) + [y] for i, (u, y) in enumerate(zip(proj, data.y))))

    if args.quadratic:
        fit = quadratic_direction_fit(data, dirs)
        write_csv(out / "quadratic_fit.csv", ["term", "estimate", "std_error", "t_value", "p_value"],
                  zip(fit.terms, fit.coef, fit.std_errors, fit.t_values, fit.p_values))
        write_csv(out / "quadratic_summary.csv", ["statistic", "value"],
                  [["r_squared", fit.r_squared], ["n", data.n]])
        write_csv(out / "residuals_fitted.csv", ["obs", "fitted", "residual"],
                  ([i + 1, f, r] for i, (f, r) in enumerate(zip(fit.fitted, fit.residuals))))
        (osm, osr), _ = stats.probplot(fit.residuals, dist="norm")
        write_csv(out / "qq.csv", ["theoretical_quantile", "sample_quantile"], zip(osm, osr))
        log.info("quadratic fit R^2 = %.4f", fit.r_squared)
    return 0


# -- transform --------------------------------------------------------------


def cmd_transform(args) -> int:
    if (args.direction_file is None) == (args.direction_method is None):
        raise UsageError("give exactly one of --direction-file or --direction-method")
    loaded = _load(args)
    data = loaded.data
    if args.direction_file:
        v = read_direction(args.direction_file, loaded.predictors)
    else:
        if args.direction_method not in METHODS:
            raise ValueError(f"unknown method {args.direction_method!r}")
        v = estimate(args.direction_method, data, 1, _config(args))[:, 0]
    ctx = local_mean_at_center(data, v, args.m)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    header = ["obs", "branch", loaded.response]
    cols = [np.arange(1, data.n + 1), np.where(data.X @ ctx.v > ctx.center, "upper", "lower"), data.y]
    if args.which in ("response", "both"):
        header.append(f"{loaded.response}_star")
        cols.append(transform_response(data, ctx))
    if args.which in ("predictors", "both"):
        Xs = transform_predictors(data, ctx)
        header += [f"{name}_star" for name in loaded.predictors]
        cols += list(Xs.T)
    rows = ([c[i] for c in cols] for i in range(data.n))
    write_csv(out / "transformed.csv", header, rows)
    context = [["center", ctx.center], ["local_mean", ctx.local_mean], ["m", ctx.m]]
    context += [[f"v:{name}", x] for name, x in zip(loaded.predictors, ctx.v)]
    write_csv(out / "context.csv", ["key", "value"], context)
    return 0


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "transform": cmd_transform}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"symfold: usage error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"symfold: usage error: {exc}", file=sys.stderr)
        return 2
    except (SymfoldError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        msg = " ".join(str(exc).split())
        print(f"symfold: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
