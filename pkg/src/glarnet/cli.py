"""Command-line entry point: simulate / fit / experiment / verify / report.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 solver
non-convergence under --strict. All output files are written atomically.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys

import numpy as np

from . import estimator, experiments, plots, theory
from .simulate import read_series_csv, simulate as run_simulation, write_series_csv
from .estimator import EstimatorConfig
from .families import Family
from .model import atomic_write_text, load_model, validate_model


class DataError(Exception):
    pass


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("GLARNET_THREADS", "1"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glarnet",
                                description="sparse network inference for GLAR processes")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="generate a sample path")
    ps.add_argument("--model", required=True)
    ps.add_argument("--T", type=int, required=True)
    ps.add_argument("--burn-in", type=int, default=0)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--x0", default=None,
                    help="comma-separated start state; default poisson1_init / zeros")
    ps.add_argument("--out", required=True)

    pf = sub.add_parser("fit", help="estimate the network matrix from a series")
    pf.add_argument("--series", required=True)
    pf.add_argument("--model", required=True, help="model JSON providing nu and the box")
    pf.add_argument("--lambda", dest="lam", default="paper",
                    help="'paper' (0.1/sqrt(T)), 'thm2' (3log(MT)/sqrt(T) scale) or a float")
    pf.add_argument("--tol", type=float, default=1e-7)
    pf.add_argument("--max-iter", type=int, default=5000)
    pf.add_argument("--threads", type=int, default=None)
    pf.add_argument("--strict", action="store_true")
    pf.add_argument("--out", required=True, help="output prefix (.json and .csv written)")

    pe = sub.add_parser("experiment", help="run a (s, T) grid of trials")
    pe.add_argument("--grid", required=True, help="INI grid config")
    pe.add_argument("--trials", type=int, default=None)
    pe.add_argument("--seed", type=int, default=None)
    pe.add_argument("--threads", type=int, default=None)
    pe.add_argument("--out", required=True, help="output directory")

    pv = sub.add_parser("verify", help="check the closed-form claims numerically")
    pv.add_argument("--family", choices=["bernoulli", "poisson"], default="bernoulli")
    pv.add_argument("--M", type=int, default=3)
    pv.add_argument("--T", type=int, default=400)
    pv.add_argument("--seeds", type=int, default=100)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--model", default=None, help="optional model JSON for the report")
    pv.add_argument("--out", required=True, help="output directory")

    pr = sub.add_parser("report", help="plots and scaling diagnostics from results CSV")
    pr.add_argument("--results", required=True)
    pr.add_argument("--out", required=True, help="output directory")
    return p


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    bad = validate_model(model, for_simulation=True)
    if bad:
        raise DataError("invalid model: " + "; ".join(bad))
    if args.x0 is not None:
        x0 = np.array([float(v) for v in args.x0.split(",")])
    elif model.family is Family.POISSON:
        x0 = "poisson1_init"
    else:
        x0 = np.zeros(model.M)
    series = run_simulation(model, x0, args.T, burn_in=args.burn_in, seed=args.seed)
    write_series_csv(series, args.out, model_path=args.model)
    print(f"wrote {args.out} ({series.T + 1} rows, M={series.M})")
    return 0


def _parse_lambda(spec: str, T: int, M: int) -> float:
    if spec == "paper":
        return estimator.default_lambda(T)
    if spec == "thm2":
        return 3.0 * math.log(M * T) / math.sqrt(T)
    try:
        return float(spec)
    except ValueError:
        raise DataError(f"bad --lambda value {spec!r}") from None


def cmd_fit(args) -> int:
    model = load_model(args.model)
    series = read_series_csv(args.series)
    if series.M != model.M:
        raise DataError(f"series dimension {series.M} != model dimension {model.M}")
    lam = _parse_lambda(args.lam, series.T, series.M)
    config = EstimatorConfig(lam=lam, a_min=model.a_min, a_max=model.a_max,
                             tol=args.tol, max_iter=args.max_iter)
    result = estimator.fit(model.family, model.nu, series, config, threads=_threads(args))
    atomic_write_text(args.out + ".json",
                      json.dumps({"lambda": lam, **result.to_dict()}, indent=2) + "\n")
    lines = [",".join(repr(float(v)) for v in row) for row in result.A_hat]
    atomic_write_text(args.out + ".csv", "\n".join(lines) + "\n")
    n_bad = int((~result.converged_per_row).sum())
    print(f"wrote {args.out}.json / .csv (lambda={lam:.6g}, {n_bad} rows not converged)")
    if args.strict and n_bad:
        print("solver non-convergence under --strict", file=sys.stderr)
        return 3
    return 0


GRID_DEFAULTS = {
    "family": "poisson",
    "M": "20",
    "rho": "5",
    "s_values": "40",
    "T_values": "100,178,316,400",
    "trials": "20",
    "lambda": "paper_default",
    "burn_in": "0",
    "seed": "0",
    "structure": "random",
    "value_low": "-1",
    "value_high": "0",
    "support_threshold": "0.1",
}


def load_grid_config(path) -> experiments.ExperimentGrid:
    """Parse the flat INI grid config ([experiment] section or bare keys)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive (M vs m)
    with open(path) as fh:
        text = fh.read()
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    try:
        cp.read_string(text, source=os.fspath(path))
    except configparser.Error as exc:
        raise DataError(f"{path}: {exc}") from None
    section = cp["experiment"] if cp.has_section("experiment") else cp[cp.sections()[0]]
    unknown = set(section) - set(GRID_DEFAULTS)
    if unknown:
        raise DataError(f"{path}: unknown key(s) {sorted(unknown)}")
    get = lambda k: section.get(k, GRID_DEFAULTS[k])
    lam = get("lambda")
    try:
        grid = experiments.ExperimentGrid(
            family=Family.from_name(get("family")),
            M=int(get("M")),
            rho=int(get("rho")),
            s_values=tuple(int(v) for v in get("s_values").split(",")),
            T_values=tuple(int(v) for v in get("T_values").split(",")),
            trials=int(get("trials")),
            lambda_rule=lam if lam == "paper_default" else float(lam),
            burn_in=int(get("burn_in")),
            base_seed=int(get("seed")),
            structure=get("structure"),
            value_low=float(get("value_low")),
            value_high=float(get("value_high")),
            support_threshold=float(get("support_threshold")),
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return grid


def cmd_experiment(args) -> int:
    grid = load_grid_config(args.grid)
    if args.trials is not None:
        grid.trials = args.trials
    if args.seed is not None:
        grid.base_seed = args.seed
    grid.threads = _threads(args)
    os.makedirs(args.out, exist_ok=True)
    result = experiments.run_grid(grid, progress=print)
    csv_path = os.path.join(args.out, "results.csv")
    experiments.write_results_csv(result, csv_path)
    written = plots.emit_experiment_plots(result.cells, args.out)
    print(f"wrote {csv_path} and {len(written)} plots")
    return 0


def cmd_verify(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    rows = theory.run_verification(base_seed=args.seed, mc_trials=args.seeds)
    lines = ["check,passed,detail"]
    ok = True
    for r in rows:
        status = "pass" if r["passed"] else "FAIL"
        print(f"{status:4s}  {r['name']}: {r['detail']}")
        lines.append(f"{r['name']},{str(r['passed']).lower()},\"{r['detail']}\"")
        ok = ok and r["passed"]
    atomic_write_text(os.path.join(args.out, "verification.csv"), "\n".join(lines) + "\n")
    if args.model:
        model = load_model(args.model)
        report = theory.theory_report(model, args.T, estimator.default_lambda(args.T))
    else:
        A = np.zeros((args.M, args.M))
        from .model import GlarModel
        model = GlarModel(Family.from_name(args.family), A, np.zeros(args.M))
        report = theory.theory_report(model, args.T, estimator.default_lambda(args.T))
    atomic_write_text(os.path.join(args.out, "theory_report.json"),
                      json.dumps(report.to_dict(), indent=2) + "\n")
    return 0 if ok else 2


def cmd_report(args) -> int:
    cells = experiments.read_results_csv(args.results)
    os.makedirs(args.out, exist_ok=True)
    written = plots.emit_experiment_plots(cells, args.out)
    diag = {}
    try:
        diag = experiments.scaling_diagnostics(
            experiments.ExperimentResult(grid=None, cells=cells))
    except ValueError:
        pass
    atomic_write_text(os.path.join(args.out, "diagnostics.json"),
                      json.dumps(diag, indent=2) + "\n")
    print(f"wrote {len(written)} plots and diagnostics.json")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    handlers = {
        "simulate": cmd_simulate,
        "fit": cmd_fit,
        "experiment": cmd_experiment,
        "verify": cmd_verify,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (DataError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
