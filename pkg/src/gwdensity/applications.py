"""Quantities derived from the fitted law of W.

All probabilities are conditional on survival (``W > 0``) and rely on the
large-``n`` approximation ``Z_n ~ W m**n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reconstruct import (
    DensityModel,
    InvalidMomentsError,
    MomentVector,
    conditional_cdf,
    density_at,
    quantile,
)


@dataclass(frozen=True)
class EstablishmentQuery:
    """Time for the population to reach ``threshold_K``: ``tau_K = log(K/W) / log m``."""

    threshold_K: float
    model: DensityModel
    m: float

    def __post_init__(self):
        if not self.threshold_K > 0:
            raise ValueError("threshold K must be positive")
        if not self.m > 1:
            raise ValueError("m must exceed 1")


def establishment_density(query: EstablishmentQuery, t):
    """Density of ``tau_K`` at ``t``: ``f_+(K m^-t) K m^-t log m``."""
    t = np.asarray(t, dtype=float)
    w = query.threshold_K * query.m ** (-t)
    f_plus = np.asarray(density_at(query.model, w)) / (1.0 - query.model.atom_q)
    out = f_plus * w * math.log(query.m)
    return out if out.ndim else float(out)


def establishment_cdf(query: EstablishmentQuery, t):
    """``P(tau_K <= t | W > 0) = 1 - F_+(K m^-t)``."""
    w = query.threshold_K * query.m ** (-np.asarray(t, dtype=float))
    return 1.0 - conditional_cdf(query.model, w)


def establishment_pmf(query: EstablishmentQuery, n_max: int) -> np.ndarray:
    """Probabilities that ``ceil(tau_K)`` equals ``0, 1, ..., n_max``.

    Mass with ``tau_K <= 0`` is lumped into generation zero.
    """
    cdf = np.array([float(establishment_cdf(query, n)) for n in range(n_max + 1)])
    return np.diff(np.concatenate([[0.0], cdf]))


def prediction_interval(model: DensityModel, m: float, n: int, level: float) -> tuple[float, float]:
    """Central ``level`` interval for ``Z_n`` given survival."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if n < 0:
        raise ValueError("n must be nonnegative")
    tail = 0.5 * (1.0 - level)
    scale = m**n
    return scale * quantile(model, tail), scale * quantile(model, 1.0 - tail)


def exceedance_probability(model: DensityModel, m: float, n: int, K: float) -> float:
    """``P(Z_n >= K | W > 0) ~ 1 - F_+(K / m**n)``."""
    if not K > 0:
        raise ValueError("K must be positive")
    return float(1.0 - conditional_cdf(model, K * m ** (-n)))


def moments_of_sum(moments: MomentVector, k: int) -> MomentVector:
    """Moments of ``W_1 + ... + W_k`` for independent copies of ``W``.

    The atom of the sum at zero is ``q**k``; it is not part of the return
    value.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    base = moments.moments
    N = base.size - 1
    binom = np.zeros((N + 1, N + 1))
    for n in range(N + 1):
        binom[n, : n + 1] = [math.comb(n, i) for i in range(n + 1)]
    cur = base.copy()
    with np.errstate(over="raise", invalid="raise"):
        try:
            for _ in range(k - 1):
                cur = np.array([np.dot(binom[n, : n + 1] * cur[: n + 1], base[n::-1])
                                for n in range(N + 1)])
        except FloatingPointError:
            raise InvalidMomentsError("moment overflow; reduce N or k") from None
    if not np.all(np.isfinite(cur)):
        raise InvalidMomentsError("moment overflow; reduce N or k")
    return MomentVector(cur)
