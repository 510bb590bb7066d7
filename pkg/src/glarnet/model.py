"""The GLAR model object: a parameter matrix, offsets and box bounds.

Each coordinate of X_{t+1} is drawn from the family with natural parameter
theta_m = nu_m + a_m . X_t, where a_m is row m of the matrix A.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile

import numpy as np

from .families import Family, log_partition


@dataclasses.dataclass
class GlarModel:
    family: Family
    A: np.ndarray            # M x M, rows act on the previous state
    nu: np.ndarray           # length M
    a_min: float = -math.inf
    a_max: float = math.inf
    nu_min: float = -math.inf
    nu_max: float = math.inf

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.nu = np.asarray(self.nu, dtype=float).ravel()
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError(f"A must be square, got shape {self.A.shape}")
        if self.nu.shape[0] != self.A.shape[0]:
            raise ValueError(
                f"nu has length {self.nu.shape[0]}, expected {self.A.shape[0]}")

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def nu_tilde(self) -> float:
        lo = abs(self.nu_min) if math.isfinite(self.nu_min) else float(np.max(np.abs(self.nu)))
        hi = abs(self.nu_max) if math.isfinite(self.nu_max) else float(np.max(np.abs(self.nu)))
        return max(lo, hi, float(np.max(np.abs(self.nu))) if self.M else 0.0)

    @property
    def a_tilde(self) -> float:
        lo = abs(self.a_min) if math.isfinite(self.a_min) else float(np.max(np.abs(self.A)))
        hi = abs(self.a_max) if math.isfinite(self.a_max) else float(np.max(np.abs(self.A)))
        return max(lo, hi, float(np.max(np.abs(self.A))))

    def natural_params(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.M:
            raise ValueError(f"state has length {x.shape[0]}, expected {self.M}")
        return self.nu + self.A @ x

    def conditional_mean(self, x) -> np.ndarray:
        return log_partition(self.family, self.natural_params(x), order=1)

    def conditional_variance(self, x) -> np.ndarray:
        return log_partition(self.family, self.natural_params(x), order=2)


@dataclasses.dataclass
class SparsityProfile:
    s: int                       # total nonzeros
    rho: int                     # max nonzeros in any row
    rho_per_row: np.ndarray
    support: set                 # set of (row, col) pairs

    def __post_init__(self):
        self.rho_per_row = np.asarray(self.rho_per_row, dtype=int)
        assert self.s == int(self.rho_per_row.sum())
        assert len(self.support) == self.s


def sparsity_of(A, zero_tol: float = 0.0) -> SparsityProfile:
    """Sparsity pattern of A; entries with |A_ij| <= zero_tol count as zero.

    zero_tol defaults to 0 for exact synthetic matrices; fitted matrices are
    usually profiled with a small positive tolerance to absorb solver
    round-off.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    A = np.asarray(A, dtype=float)
    nz = np.abs(A) > zero_tol
    rows, cols = np.nonzero(nz)
    rho_per_row = nz.sum(axis=1)
    return SparsityProfile(
        s=int(nz.sum()),
        rho=int(rho_per_row.max()) if A.shape[0] else 0,
        rho_per_row=rho_per_row,
        support=set(zip(rows.tolist(), cols.tolist())),
    )


def validate_model(model: GlarModel, for_simulation: bool = False) -> list:
    """Collect invariant violations; empty list means the model is valid."""
    violations = []
    if np.any(model.A < model.a_min) or np.any(model.A > model.a_max):
        violations.append("matrix entry out of box")
    if np.any(model.nu < model.nu_min) or np.any(model.nu > model.nu_max):
        violations.append("offset out of box")
    if model.family is Family.POISSON and for_simulation and np.any(model.A > 0):
        violations.append("positive matrix entry in a Poisson model used for simulation")
    if not np.all(np.isfinite(model.A)) or not np.all(np.isfinite(model.nu)):
        violations.append("non-finite parameter")
    return violations


def _bound_to_json(v: float):
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    return v


def _bound_from_json(v) -> float:
    if v == "+inf" or v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


def model_to_dict(model: GlarModel) -> dict:
    return {
        "family": model.family.value,
        "M": model.M,
        "nu": model.nu.tolist(),
        "A": model.A.tolist(),
        "a_min": _bound_to_json(model.a_min),
        "a_max": _bound_to_json(model.a_max),
        "nu_min": _bound_to_json(model.nu_min),
        "nu_max": _bound_to_json(model.nu_max),
    }


def model_from_dict(d: dict) -> GlarModel:
    model = GlarModel(
        family=Family.from_name(d["family"]),
        A=np.asarray(d["A"], dtype=float),
        nu=np.asarray(d["nu"], dtype=float),
        a_min=_bound_from_json(d.get("a_min", "-inf")),
        a_max=_bound_from_json(d.get("a_max", "+inf")),
        nu_min=_bound_from_json(d.get("nu_min", "-inf")),
        nu_max=_bound_from_json(d.get("nu_max", "+inf")),
    )
    if "M" in d and int(d["M"]) != model.M:
        raise ValueError(f"declared M={d['M']} but A is {model.M}x{model.M}")
    return model


def save_model(model: GlarModel, path) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path) -> GlarModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-glarnet-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
