"""Row-decoupled proximal gradient solver for the l1-regularized MLE.

The negative log-likelihood of the process separates across rows of A, so
each row is an independent composite problem

    min_a  (1/T) sum_t [ Z(nu_m + a.X_t) - (a.X_t) X_{t+1,m} ]
           + lambda ||a||_1 + indicator(a in [a_min, a_max]^M)

solved by ISTA with optional FISTA momentum, backtracking line search
(eta0 = 1, beta = 0.5) and momentum restart on objective increase. The
prox of the l1 + box term is soft-threshold followed by clipping, exact
because the box is separable and contains 0.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .families import Family, log_partition
from .simulate import TimeSeries


class DivergentStepError(RuntimeError):
    def __init__(self, row: int, iteration: int):
        super().__init__(f"divergent step in row {row} at iteration {iteration}")
        self.row = row
        self.iteration = iteration


@dataclasses.dataclass
class EstimatorConfig:
    lam: float = 0.0
    a_min: float = -math.inf
    a_max: float = math.inf
    tol: float = 1e-7
    max_iter: int = 5000
    step_size: float = 1.0        # eta0; also the fixed step when backtracking is off
    backtracking: bool = True
    acceleration: bool = True     # FISTA momentum with restart

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclasses.dataclass
class EstimateResult:
    A_hat: np.ndarray
    objective_per_row: np.ndarray
    iterations_per_row: np.ndarray
    converged_per_row: np.ndarray
    final_residual_per_row: np.ndarray

    @property
    def objective(self) -> float:
        return float(np.sum(self.objective_per_row))

    def to_dict(self) -> dict:
        return {
            "A_hat": self.A_hat.tolist(),
            "objective_per_row": self.objective_per_row.tolist(),
            "iterations_per_row": self.iterations_per_row.tolist(),
            "converged_per_row": self.converged_per_row.tolist(),
            "final_residual_per_row": self.final_residual_per_row.tolist(),
        }


def default_lambda(T: int) -> float:
    """The experiment-protocol weight 0.1/sqrt(T)."""
    if T < 1:
        raise ValueError("T must be at least 1")
    return 0.1 / math.sqrt(T)


def _design(series: TimeSeries):
    X = np.ascontiguousarray(series.data[:-1])
    Y = np.ascontiguousarray(series.data[1:])
    return X, Y


def nll_row(family: Family, nu_m: float, a, series: TimeSeries, m: int) -> float:
    """(1/T) sum_t [Z(nu_m + a.X_t) - (a.X_t) X_{t+1,m}]."""
    X, Y = _design(series)
    a = np.asarray(a, dtype=float).ravel()
    if a.shape[0] != X.shape[1]:
        raise ValueError(f"coefficient length {a.shape[0]} != dimension {X.shape[1]}")
    u = X @ a
    return float(np.mean(log_partition(family, nu_m + u, order=0) - u * Y[:, m]))


def grad_nll_row(family: Family, nu_m: float, a, series: TimeSeries, m: int) -> np.ndarray:
    """Exact gradient (1/T) sum_t [Z'(nu_m + a.X_t) - X_{t+1,m}] X_t."""
    X, Y = _design(series)
    a = np.asarray(a, dtype=float).ravel()
    if a.shape[0] != X.shape[1]:
        raise ValueError(f"coefficient length {a.shape[0]} != dimension {X.shape[1]}")
    r = log_partition(family, nu_m + X @ a, order=1) - Y[:, m]
    return (r @ X) / X.shape[0]


def prox_l1_box(v, tau: float, a_min: float = -math.inf, a_max: float = math.inf) -> np.ndarray:
    """Soft-threshold at tau, then clip into [a_min, a_max]."""
    v = np.asarray(v, dtype=float)
    out = np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)
    return np.clip(out, a_min, a_max)


def _row_objective(family, nu_m, a, X, ym, lam, T):
    u = X @ a
    nll = float(np.sum(log_partition(family, nu_m + u, order=0) - u * ym)) / T
    return nll + lam * float(np.sum(np.abs(a)))


def fit_row(family: Family, nu_m: float, series: TimeSeries, m: int,
            config: EstimatorConfig, objective_trace: list | None = None):
    """Solve one row; returns (a_hat, diagnostics dict).

    Stops when the fixed-point residual ||a - prox_step(a)||_inf / eta
    drops to config.tol, from the zero initializer. When objective_trace is
    a list, the composite objective of every accepted iterate is appended.
    """
    X, Y = _design(series)
    ym = np.ascontiguousarray(Y[:, m])
    T, M = X.shape
    lam = config.lam
    a = np.zeros(M)
    z = a.copy()                      # extrapolated point
    eta = config.step_size
    t_mom = 1.0
    f_a = _row_objective(family, nu_m, a, X, ym, lam, T)
    iterations = 0
    converged = False
    residual = math.inf

    for k in range(config.max_iter):
        iterations = k + 1
        u = X @ z
        zeta = nu_m + u
        fz = float(np.sum(log_partition(family, zeta, order=0) - u * ym)) / T
        g = ((log_partition(family, zeta, order=1) - ym) @ X) / T
        if not np.isfinite(fz) or not np.all(np.isfinite(g)):
            raise DivergentStepError(m, k)

        while True:
            a_new = prox_l1_box(z - eta * g, eta * lam, config.a_min, config.a_max)
            d = a_new - z
            un = X @ a_new
            f_new = float(np.sum(log_partition(family, nu_m + un, order=0) - un * ym)) / T
            if not config.backtracking:
                break
            if f_new <= fz + float(g @ d) + float(d @ d) / (2.0 * eta) + 1e-15:
                break
            eta *= 0.5
            if eta < 1e-16:
                raise DivergentStepError(m, k)

        obj_new = f_new + lam * float(np.sum(np.abs(a_new)))
        # fixed-point residual at the accepted point
        residual = float(np.max(np.abs(a_new - z))) / eta
        if config.acceleration:
            if obj_new > f_a + lam * float(np.sum(np.abs(a))):
                # momentum restart: retake the step from a itself
                z = a.copy()
                t_mom = 1.0
                continue
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
            z = a_new + ((t_mom - 1.0) / t_next) * (a_new - a)
            t_mom = t_next
        else:
            z = a_new
        a = a_new
        f_a = f_new
        if objective_trace is not None:
            objective_trace.append(obj_new)
        if residual <= config.tol:
            converged = True
            break

    obj = f_a + lam * float(np.sum(np.abs(a)))
    diagnostics = {
        "objective": obj,
        "iterations": iterations,
        "converged": converged,
        "final_residual": residual,
    }
    return a, diagnostics


def fit(family: Family, nu, series: TimeSeries, config: EstimatorConfig,
        threads: int = 1) -> EstimateResult:
    """Fit all rows; output is independent of thread count and schedule."""
    nu = np.asarray(nu, dtype=float).ravel()
    M = series.M
    if nu.shape[0] != M:
        raise ValueError(f"nu has length {nu.shape[0]}, expected {M}")

    def solve(m):
        return fit_row(family, nu[m], series, m, config)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(solve, range(M)))
    else:
        rows = [solve(m) for m in range(M)]

    A_hat = np.vstack([a for a, _ in rows]) if M else np.zeros((0, 0))
    diag = [d for _, d in rows]
    return EstimateResult(
        A_hat=A_hat,
        objective_per_row=np.array([d["objective"] for d in diag]),
        iterations_per_row=np.array([d["iterations"] for d in diag], dtype=int),
        converged_per_row=np.array([d["converged"] for d in diag], dtype=bool),
        final_residual_per_row=np.array([d["final_residual"] for d in diag]),
    )


def objective(family: Family, nu, A, series: TimeSeries, lam: float) -> float:
    """Full objective; exactly the sum of per-row objectives, rows in order."""
    total = 0.0
    for m in range(series.M):
        total += (nll_row(family, float(np.asarray(nu).ravel()[m]), A[m], series, m)
                  + lam * float(np.sum(np.abs(A[m]))))
    return total


def empirical_lambda_floor(family: Family, nu, series: TimeSeries, A_true) -> float:
    """max_m (2/T) || sum_t (X_{t+1,m} - E[X_{t+1,m}|X_t]) X_t ||_inf.

    Conditional means are computed under the supplied (usually ground-truth)
    parameters; lambda must dominate this value for the error bounds to
    apply.
    """
    X, Y = _design(series)
    nu = np.asarray(nu, dtype=float).ravel()
    A_true = np.asarray(A_true, dtype=float)
    if A_true.shape != (series.M, series.M) or nu.shape[0] != series.M:
        raise ValueError("parameter dimensions do not match the series")
    mu = log_partition(family, nu + X @ A_true.T, order=1)
    G = (Y - mu).T @ X                      # M x M, rows indexed by m
    return float(2.0 / X.shape[0] * np.max(np.abs(G)))


def lasso_baseline(series: TimeSeries, m: int, lam: float,
                   config: EstimatorConfig | None = None) -> np.ndarray:
    """Least-squares LASSO row fit: (1/T)||y_m - X a||_2^2 + lam ||a||_1.

    Same prox-gradient loop as fit_row with the squared loss; provided for
    empirical comparison against the likelihood-based estimator.
    """
    if config is None:
        config = EstimatorConfig()
    X, Y = _design(series)
    ym = np.ascontiguousarray(Y[:, m])
    T, M = X.shape

    def f(a):
        r = ym - X @ a
        return float(r @ r) / T

    def grad(a):
        return (2.0 / T) * (X.T @ (X @ a - ym))

    a = np.zeros(M)
    z = a.copy()
    eta = config.step_size
    t_mom = 1.0
    for k in range(config.max_iter):
        g = grad(z)
        fz = f(z)
        while True:
            a_new = prox_l1_box(z - eta * g, eta * lam, config.a_min, config.a_max)
            d = a_new - z
            if not config.backtracking:
                break
            if f(a_new) <= fz + float(g @ d) + float(d @ d) / (2.0 * eta) + 1e-15:
                break
            eta *= 0.5
            if eta < 1e-16:
                raise DivergentStepError(m, k)
        residual = float(np.max(np.abs(a_new - z))) / eta
        if config.acceleration:
            if f(a_new) + lam * np.sum(np.abs(a_new)) > f(a) + lam * np.sum(np.abs(a)):
                z = a.copy()
                t_mom = 1.0
                continue
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
            z = a_new + ((t_mom - 1.0) / t_next) * (a_new - a)
            t_mom = t_next
        else:
            z = a_new
        a = a_new
        if residual <= config.tol:
            break
    return a
