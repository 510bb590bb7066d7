"""Config-driven simulation studies: error decay in T, linearity in s,
support recovery and burn-in comparisons, with deterministic per-trial seeds.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .estimator import EstimatorConfig, default_lambda, fit
from .families import Family
from .model import GlarModel, atomic_write_text, sparsity_of
from .simulate import GenSpec, derive_seed, rng_from_seed, sample_sparse_matrix, simulate

RESULT_COLUMNS = ("family", "s", "T", "trials", "mse_median", "mse_q25", "mse_q75",
                  "mse_times_T", "mse_over_s", "precision_median", "recall_median",
                  "failed")


@dataclasses.dataclass
class ExperimentGrid:
    family: Family = Family.POISSON
    M: int = 20
    rho: int = 5
    s_values: tuple = (40,)
    T_values: tuple = (100, 178, 316, 400)
    trials: int = 20
    lambda_rule: str | float = "paper_default"   # or a fixed float
    burn_in: int = 0
    base_seed: int = 0
    structure: str = "random"
    value_low: float = -1.0
    value_high: float = 0.0
    support_threshold: float = 0.1
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        self.s_values = tuple(int(s) for s in self.s_values)
        self.T_values = tuple(int(T) for T in self.T_values)
        for s in self.s_values:
            if s > self.M * self.rho:
                raise ValueError(f"infeasible sparsity: s={s} > M*rho={self.M * self.rho}")

    def lam(self, T: int) -> float:
        if self.lambda_rule == "paper_default":
            return default_lambda(T)
        return float(self.lambda_rule)


@dataclasses.dataclass
class CellResult:
    family: str
    s: int
    T: int
    trials: int
    mse_median: float
    mse_q25: float
    mse_q75: float
    mse_times_T: float
    mse_over_s: float
    precision_median: float
    recall_median: float
    failed: int
    offsupport_median: float = math.nan

    def row(self):
        return [self.family, self.s, self.T, self.trials,
                self.mse_median, self.mse_q25, self.mse_q75,
                self.mse_times_T, self.mse_over_s,
                self.precision_median, self.recall_median, self.failed]


@dataclasses.dataclass
class ExperimentResult:
    grid: ExperimentGrid
    cells: list

    def cell(self, s: int, T: int) -> CellResult:
        for c in self.cells:
            if c.s == s and c.T == T:
                return c
        raise KeyError(f"no cell (s={s}, T={T})")


def mse(A_hat, A_star) -> float:
    """Squared Frobenius distance between the estimate and the truth."""
    A_hat = np.asarray(A_hat, dtype=float)
    A_star = np.asarray(A_star, dtype=float)
    if A_hat.shape != A_star.shape:
        raise ValueError(f"shape mismatch: {A_hat.shape} vs {A_star.shape}")
    d = A_hat - A_star
    return float(np.sum(d * d))


def support_metrics(A_hat, A_star, threshold: float):
    """(precision, recall) of thresholded support against the true support.

    Precision is 1 by convention when the predicted support is empty.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    A_hat = np.asarray(A_hat, dtype=float)
    A_star = np.asarray(A_star, dtype=float)
    if A_hat.shape != A_star.shape:
        raise ValueError(f"shape mismatch: {A_hat.shape} vs {A_star.shape}")
    pred = np.abs(A_hat) > threshold
    true = A_star != 0
    tp = int(np.sum(pred & true))
    precision = tp / int(pred.sum()) if pred.any() else 1.0
    recall = tp / int(true.sum()) if true.any() else 1.0
    return precision, recall


def offsupport_count(A_hat, A_star, threshold: float) -> int:
    pred = np.abs(np.asarray(A_hat)) > threshold
    return int(np.sum(pred & (np.asarray(A_star) == 0)))


def run_trial(grid: ExperimentGrid, s: int, T: int, cell_index: int, trial: int,
              burn_in: int | None = None):
    """One (draw truth, simulate, fit) trial; returns a metrics dict."""
    seed = derive_seed(grid.base_seed, cell_index, trial)
    A_star = sample_sparse_matrix(GenSpec(
        M=grid.M, s=s, rho=grid.rho, value_low=grid.value_low,
        value_high=grid.value_high, structure=grid.structure, seed=seed))
    model = GlarModel(grid.family, A_star, np.zeros(grid.M))
    if grid.family is Family.POISSON:
        x0 = "poisson1_init"
    else:
        x0 = (rng_from_seed(seed).random(grid.M) < 0.5).astype(float)
    bi = grid.burn_in if burn_in is None else burn_in
    series = simulate(model, x0, T, burn_in=bi, seed=derive_seed(seed, 0, 1))
    config = EstimatorConfig(lam=grid.lam(T))
    result = fit(grid.family, model.nu, series, config)
    prec, rec = support_metrics(result.A_hat, A_star, grid.support_threshold)
    return {
        "mse": mse(result.A_hat, A_star),
        "precision": prec,
        "recall": rec,
        "offsupport": offsupport_count(result.A_hat, A_star, grid.support_threshold),
        "converged": bool(result.converged_per_row.all()),
    }


def _summarize(grid: ExperimentGrid, s: int, T: int, records: list, failed: int) -> CellResult:
    mses = np.array([r["mse"] for r in records])
    return CellResult(
        family=grid.family.value, s=s, T=T, trials=len(records) + failed,
        mse_median=float(np.median(mses)),
        mse_q25=float(np.quantile(mses, 0.25)),
        mse_q75=float(np.quantile(mses, 0.75)),
        mse_times_T=float(np.median(mses)) * T,
        mse_over_s=float(np.median(mses)) / s if s else math.nan,
        precision_median=float(np.median([r["precision"] for r in records])),
        recall_median=float(np.median([r["recall"] for r in records])),
        failed=failed,
        offsupport_median=float(np.median([r["offsupport"] for r in records])),
    )


def run_grid(grid: ExperimentGrid, progress=None) -> ExperimentResult:
    """Run every (s, T) cell; per-trial failures are counted, never fatal.

    Trials may execute in a thread pool; records are aggregated in trial
    order so the result is identical for any thread count.
    """
    cells = []
    cell_index = 1
    for s in grid.s_values:
        for T in grid.T_values:
            records, failed = _run_cell(grid, s, T, cell_index)
            cells.append(_summarize(grid, s, T, records, failed))
            if progress is not None:
                progress(f"cell s={s} T={T} done "
                         f"(median MSE {cells[-1].mse_median:.4g}, {failed} failed)")
            cell_index += 1
    return ExperimentResult(grid=grid, cells=cells)


def _run_cell(grid: ExperimentGrid, s: int, T: int, cell_index: int,
              burn_in: int | None = None):
    def one(trial):
        try:
            return run_trial(grid, s, T, cell_index, trial, burn_in=burn_in)
        except Exception:
            return None

    if grid.threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=grid.threads) as pool:
            outcomes = list(pool.map(one, range(grid.trials)))
    else:
        outcomes = [one(trial) for trial in range(grid.trials)]
    records = [r for r in outcomes if r is not None and r["converged"]]
    failed = sum(1 for r in outcomes if r is None or not r["converged"])
    return records, failed


def burn_in_comparison(grid: ExperimentGrid, burn_in: int = 10_000):
    """Run the grid with burn_in 0 and burn_in 10^4 under shared truth seeds.

    Returns (result_no_burnin, result_burnin, ratios) where ratios maps
    (s, T) to the median-MSE ratio burn-in over no-burn-in.
    """
    res0_cells, res1_cells, ratios = [], [], {}
    cell_index = 1
    for s in grid.s_values:
        for T in grid.T_values:
            rec0, f0 = _run_cell(grid, s, T, cell_index, burn_in=0)
            rec1, f1 = _run_cell(grid, s, T, cell_index, burn_in=burn_in)
            c0 = _summarize(grid, s, T, rec0, f0)
            c1 = _summarize(grid, s, T, rec1, f1)
            res0_cells.append(c0)
            res1_cells.append(c1)
            ratios[(s, T)] = c1.mse_median / c0.mse_median
            cell_index += 1
    return (ExperimentResult(grid, res0_cells), ExperimentResult(grid, res1_cells), ratios)


def scaling_diagnostics(result: ExperimentResult) -> dict:
    """Slope of log median MSE against log T, and max/min ratio of MSE/s.

    The slope needs at least 3 T cells at some fixed s; the flatness ratio
    needs at least 3 s cells at some fixed T.
    """
    out = {}
    by_s = {}
    by_T = {}
    for c in result.cells:
        by_s.setdefault(c.s, []).append(c)
        by_T.setdefault(c.T, []).append(c)
    for s, cells in by_s.items():
        if len(cells) >= 3:
            x = np.log([c.T for c in cells])
            y = np.log([c.mse_median for c in cells])
            out["slope_logT"] = float(np.polyfit(x, y, 1)[0])
            break
    for T, cells in by_T.items():
        if len(cells) >= 3:
            vals = [c.mse_over_s for c in cells]
            out["flatness_mse_over_s"] = float(max(vals) / min(vals))
            break
    if not out:
        raise ValueError("need at least 3 T cells or 3 s cells for diagnostics")
    return out


def write_results_csv(result: ExperimentResult, path) -> None:
    lines = [",".join(RESULT_COLUMNS)]
    for c in result.cells:
        lines.append(",".join(_cell_fmt(v) for v in c.row()))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _cell_fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_results_csv(path) -> list:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"{path}: unexpected results header")
        cells = []
        for line in fh:
            if not line.strip():
                continue
            vals = line.strip().split(",")
            cells.append(CellResult(
                family=vals[0], s=int(vals[1]), T=int(vals[2]), trials=int(vals[3]),
                mse_median=float(vals[4]), mse_q25=float(vals[5]), mse_q75=float(vals[6]),
                mse_times_T=float(vals[7]), mse_over_s=float(vals[8]),
                precision_median=float(vals[9]), recall_median=float(vals[10]),
                failed=int(vals[11])))
    return cells
