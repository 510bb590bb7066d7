"""Sample-path generation and random sparse ground-truth matrices.

Randomness comes from numpy's Philox counter-based bit generator, keyed
directly by the 64-bit seed, so streams are reproducible from the algorithm
name alone. Poisson variates use numpy's sampler (inversion by sequential
search below rate 10, PTRS transformed rejection above). Per-trial seeds are
derived as

    seed' = base_seed XOR (0x9E3779B97F4A7C15 * (cell_index * 10**6 + trial_index))  mod 2**64
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os

import numpy as np

from .families import Family, log_partition
from .model import GlarModel, atomic_write_text, sparsity_of

RATE_CEILING = 1e9  # Poisson rates above this abort the trajectory
_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class UnstableTrajectoryError(RuntimeError):
    """A Poisson rate exceeded the ceiling (requires positive entries in A)."""

    def __init__(self, t: int, rate: float):
        super().__init__(f"unstable trajectory at t={t}: rate {rate:.3g} exceeds {RATE_CEILING:.0e}")
        self.t = t
        self.rate = rate


class InfeasibleSparsityError(ValueError):
    pass


@dataclasses.dataclass
class TimeSeries:
    data: np.ndarray          # (T+1) x M
    seed: int
    burn_in: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError("data must be a (T+1) x M array")

    @property
    def M(self) -> int:
        return self.data.shape[1]

    @property
    def T(self) -> int:
        return self.data.shape[0] - 1


@dataclasses.dataclass
class GenSpec:
    M: int
    s: int
    rho: int
    value_low: float = -1.0
    value_high: float = 0.0
    structure: str = "random"   # "random" | "block_diagonal"
    seed: int = 0

    def __post_init__(self):
        if self.s > self.M * self.rho:
            raise InfeasibleSparsityError(
                f"infeasible sparsity: s={self.s} exceeds M*rho={self.M * self.rho}")
        if self.rho > self.M:
            raise InfeasibleSparsityError(f"infeasible sparsity: rho={self.rho} exceeds M={self.M}")
        if self.value_low > self.value_high:
            raise ValueError("value_low must not exceed value_high")
        if self.structure not in ("random", "block_diagonal"):
            raise ValueError(f"unknown structure {self.structure!r}")


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def derive_seed(base_seed: int, cell_index: int, trial_index: int = 0) -> int:
    return (base_seed ^ ((_GOLDEN * (cell_index * 10**6 + trial_index)) & _MASK64)) & _MASK64


def step(model: GlarModel, x_t, rng: np.random.Generator, t: int = 0) -> np.ndarray:
    """Draw X_{t+1} | X_t = x_t, advancing the generator."""
    theta = model.natural_params(x_t)
    if model.family is Family.BERNOULLI:
        p = log_partition(Family.BERNOULLI, theta, order=1)
        return (rng.random(model.M) < p).astype(float)
    rate = np.exp(theta)
    if np.any(rate > RATE_CEILING):
        raise UnstableTrajectoryError(t, float(rate.max()))
    return rng.poisson(rate).astype(float)


def simulate(model: GlarModel, x0, T: int, burn_in: int = 0, seed: int = 0) -> TimeSeries:
    """Run the chain and record T transitions (T+1 states) after burn-in.

    x0 may be an explicit M-vector or the string "poisson1_init", in which
    case the start state is drawn coordinatewise from Poisson(1) using the
    same seeded stream (redrawn per call, so distinct trial seeds give
    distinct starts).
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = rng_from_seed(seed)
    if isinstance(x0, str):
        if x0 != "poisson1_init":
            raise ValueError(f"unknown initializer {x0!r}")
        x = rng.poisson(1.0, size=model.M).astype(float)
    else:
        x = np.asarray(x0, dtype=float).ravel()
        if x.shape[0] != model.M:
            raise ValueError(f"x0 has length {x.shape[0]}, expected {model.M}")
    for t in range(burn_in):
        x = step(model, x, rng, t=t - burn_in)
    data = np.empty((T + 1, model.M))
    data[0] = x
    for t in range(T):
        data[t + 1] = step(model, data[t], rng, t=t)
    return TimeSeries(data=data, seed=seed, burn_in=burn_in)


def sample_sparse_matrix(spec: GenSpec) -> np.ndarray:
    """Draw an M x M matrix with exactly s nonzeros and at most rho per row.

    Random structure places support by rejection: s cells are sampled
    uniformly without replacement and the draw is retried (up to 10**4
    times) whenever some row exceeds rho nonzeros. Block-diagonal structure
    fills contiguous rho x rho diagonal blocks, drawing the s cells among
    block positions with the same row cap.
    """
    rng = rng_from_seed(spec.seed)
    M, s, rho = spec.M, spec.s, spec.rho
    if spec.structure == "block_diagonal":
        cells = _block_cells(M, rho)
        if s > len(cells):
            raise InfeasibleSparsityError(
                f"infeasible sparsity: s={s} exceeds {len(cells)} block-diagonal cells")
    else:
        cells = [(i, j) for i in range(M) for j in range(M)]
    if s == 0:
        return np.zeros((M, M))
    cells = np.array(cells)
    for _ in range(10**4):
        idx = rng.choice(len(cells), size=s, replace=False)
        rows = cells[idx, 0]
        if np.bincount(rows, minlength=M).max() <= rho:
            A = np.zeros((M, M))
            A[cells[idx, 0], cells[idx, 1]] = rng.uniform(spec.value_low, spec.value_high, size=s)
            # redraw any exact zero so the support has exactly s cells
            while True:
                z = np.abs(A[cells[idx, 0], cells[idx, 1]]) == 0.0
                if not z.any():
                    break
                A[cells[idx][z, 0], cells[idx][z, 1]] = rng.uniform(
                    spec.value_low, spec.value_high, size=int(z.sum()))
            assert sparsity_of(A).s == s
            return A
    raise InfeasibleSparsityError(
        f"could not place s={s} cells with row cap rho={rho} in 10^4 attempts")


def _block_cells(M: int, rho: int):
    cells = []
    lo = 0
    while lo < M:
        hi = min(lo + rho, M)
        cells.extend((i, j) for i in range(lo, hi) for j in range(lo, hi))
        lo = hi
    return cells


def write_series_csv(series: TimeSeries, path, model_path=None) -> None:
    """CSV with header t,x_1,...,x_M plus a JSON sidecar <path>.meta.json."""
    header = "t," + ",".join(f"x_{j + 1}" for j in range(series.M))
    lines = [header]
    for t, row in enumerate(series.data):
        lines.append(str(t) + "," + ",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
    meta = {"seed": series.seed, "burn_in": series.burn_in}
    if model_path is not None:
        with open(model_path, "rb") as fh:
            meta["model_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    atomic_write_text(os.fspath(path) + ".meta.json", json.dumps(meta, indent=2) + "\n")


def _fmt(v: float) -> str:
    return str(int(v)) if v == int(v) else repr(v)


def read_series_csv(path) -> TimeSeries:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "t" or len(header) < 2:
            raise ValueError(f"{path}: expected header t,x_1,...,x_M")
        rows = [line.strip().split(",")[1:] for line in fh if line.strip()]
    data = np.asarray(rows, dtype=float)
    seed, burn_in = 0, 0
    meta_path = os.fspath(path) + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
        seed = meta.get("seed", 0)
        burn_in = meta.get("burn_in", 0)
    return TimeSeries(data=data, seed=seed, burn_in=burn_in)
