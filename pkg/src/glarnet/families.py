"""Exponential-family primitives for the two implemented observation laws.

Each family is a scalar exponential family with sufficient statistic
phi(x) = x and a log-partition function Z whose first two derivatives give
the conditional mean and variance of the process.
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy.special import expit


class Family(enum.Enum):
    BERNOULLI = "bernoulli"
    POISSON = "poisson"

    @classmethod
    def from_name(cls, name: str) -> "Family":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown family {name!r}") from None


def log_partition(family: Family, theta, order: int = 0):
    """Evaluate Z, Z' or Z'' at theta (scalar or array).

    Bernoulli: Z(theta) = log(1 + e^theta), computed as
    max(theta, 0) + log1p(e^{-|theta|}) so large |theta| does not overflow.
    Poisson: Z and all derivatives equal e^theta.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    theta = np.asarray(theta, dtype=float)
    if family is Family.POISSON:
        out = np.exp(theta)
    elif order == 0:
        out = np.maximum(theta, 0.0) + np.log1p(np.exp(-np.abs(theta)))
    elif order == 1:
        out = expit(theta)
    else:
        p = expit(theta)
        out = p * (1.0 - p)
    return out if out.ndim else float(out)


def log_base_measure(family: Family, x):
    """log h(x): 0 for Bernoulli, -log(x!) for Poisson."""
    x = np.asarray(x, dtype=float)
    if family is Family.BERNOULLI:
        out = np.zeros_like(x)
    else:
        out = -np.vectorize(math.lgamma)(x + 1.0)
    return out if out.ndim else float(out)


def in_support(family: Family, x) -> bool:
    x = np.asarray(x)
    if not np.all(np.isfinite(x)) or not np.all(x == np.floor(x)):
        return False
    if family is Family.BERNOULLI:
        return bool(np.all((x == 0) | (x == 1)))
    return bool(np.all(x >= 0))
