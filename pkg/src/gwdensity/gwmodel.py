"""Offspring distributions and the scalar invariants of a Galton-Watson process."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .series import TruncatedSeries, compose_coeffs, convolve_trunc

_SUM_TOL = 1e-12
_Q_TOL = 1e-14
_Q_MAX_ITERS = 1_000_000


class NotSupercriticalError(ValueError):
    pass


@dataclass(frozen=True)
class PolynomialPgf:
    """Finite-support offspring law, ``p[j] = P(theta = j)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).ravel()
        if p.size < 2:
            raise ValueError("offspring polynomial must have degree >= 1")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("offspring probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"offspring probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def _unchecked(cls, p) -> "PolynomialPgf":
        # skips the sum-to-one check; used for truncated series
        obj = object.__new__(cls)
        p = np.array(p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(obj, "p", p)
        return obj

    @property
    def degree(self) -> int:
        return self.p.size - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.p)

    def derivative(self, x):
        return np.polynomial.polynomial.polyval(x, self.derivative_coeffs())

    def derivative_coeffs(self) -> np.ndarray:
        return self.p[1:] * np.arange(1, self.p.size)


@dataclass(frozen=True)
class LinearFractionalPgf:
    """``P(z) = 1 - b/(1-c) + b z / (1 - c z)`` with ``0 < c < 1``, ``0 < b <= 1-c``."""

    b: float
    c: float

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError("linear-fractional pgf needs 0 < c < 1")
        if not 0.0 < self.b <= 1.0 - self.c + 1e-15:
            raise ValueError("linear-fractional pgf needs 0 < b <= 1 - c")

    @property
    def p0(self) -> float:
        return 1.0 - self.b / (1.0 - self.c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.p0 + self.b * x / (1.0 - self.c * x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return self.b / (1.0 - self.c * x) ** 2


Pgf = Union[PolynomialPgf, LinearFractionalPgf]


@dataclass(frozen=True)
class GwInvariants:
    m: float
    q: float
    alpha: float
    pprime_q: float


def mean(pgf: Pgf) -> float:
    """Mean offspring number ``m = P'(1)``."""
    if isinstance(pgf, LinearFractionalPgf):
        return pgf.b / (1.0 - pgf.c) ** 2
    return float(np.dot(np.arange(pgf.p.size), pgf.p))


def _check_supercritical(pgf: Pgf) -> float:
    m = mean(pgf)
    if not m > 1.0:
        raise NotSupercriticalError("mean offspring <= 1")
    return m


def extinction_probability(pgf: Pgf) -> float:
    """Smallest nonnegative root of ``P(z) = z``.

    Iterates ``q <- P(q)`` from zero; the sequence increases monotonically to
    the smallest fixed point.
    """
    _check_supercritical(pgf)
    if isinstance(pgf, PolynomialPgf) and pgf.p[0] == 0.0:
        return 0.0
    if isinstance(pgf, LinearFractionalPgf) and pgf.p0 <= 0.0:
        return 0.0
    q = 0.0
    for _ in range(_Q_MAX_ITERS):
        nxt = float(pgf(q))
        if abs(nxt - q) <= _Q_TOL:
            return nxt
        q = nxt
    return q


def alpha(pgf: Pgf) -> float:
    """Exponent of the density of W near zero: ``-log P'(q)/log m - 1``."""
    return invariants(pgf).alpha


def invariants(pgf: Pgf) -> GwInvariants:
    m = _check_supercritical(pgf)
    q = extinction_probability(pgf)
    d = float(pgf.derivative(q))
    if d <= 0.0:
        raise ValueError(
            "alpha is +infinity; density vanishes faster than any power"
        )
    a = -math.log(d) / math.log(m) - 1.0
    return GwInvariants(m=m, q=q, alpha=a, pprime_q=d)


def _lf_reciprocal(c: float, s: np.ndarray) -> np.ndarray:
    """Coefficients of ``1/(1 - c s(z))`` by forward substitution."""
    den = -c * s
    den[0] += 1.0
    if abs(den[0]) < 1e-14:
        raise ZeroDivisionError("singular rational composition")
    n = s.size
    u = np.zeros(n)
    u[0] = 1.0 / den[0]
    for j in range(1, n):
        u[j] = -np.dot(den[1 : j + 1], u[j - 1 :: -1][:j]) / den[0]
    return u


def pgf_apply_coeffs(pgf: Pgf, s: np.ndarray) -> np.ndarray:
    if isinstance(pgf, PolynomialPgf):
        return compose_coeffs(pgf.p, s)
    # b s / (1 - c s) = b s * 1/(1 - c s)
    order = s.size - 1
    u = convolve_trunc(s, _lf_reciprocal(pgf.c, s), order)
    out = pgf.b * u
    out[0] += pgf.p0
    return out


def pgf_derivative_apply_coeffs(pgf: Pgf, s: np.ndarray) -> np.ndarray:
    if isinstance(pgf, PolynomialPgf):
        return compose_coeffs(pgf.derivative_coeffs(), s)
    order = s.size - 1
    r = _lf_reciprocal(pgf.c, s)
    return pgf.b * convolve_trunc(r, r, order)


def pgf_apply_series(pgf: Pgf, s: TruncatedSeries) -> TruncatedSeries:
    """Taylor coefficients of ``P(s(z))`` to the order of ``s``."""
    return TruncatedSeries(pgf_apply_coeffs(pgf, s.coeffs))


def pgf_derivative_apply_series(pgf: Pgf, s: TruncatedSeries) -> TruncatedSeries:
    """Taylor coefficients of ``P'(s(z))`` to the order of ``s``."""
    return TruncatedSeries(pgf_derivative_apply_coeffs(pgf, s.coeffs))


def truncate_to_polynomial(pgf: LinearFractionalPgf, K: int) -> tuple[PolynomialPgf, float]:
    """Keep the first ``K`` power-series coefficients of a linear-fractional pgf.

    The result is deliberately not renormalized. Returns the polynomial and
    the missing probability mass ``b c**(K-1) / (1-c)``.
    """
    if K < 2:
        raise ValueError("truncation needs K >= 2")
    p = np.empty(K)
    p[0] = max(pgf.p0, 0.0)
    p[1:] = pgf.b * pgf.c ** np.arange(K - 1)
    deficit = pgf.b * pgf.c ** (K - 1) / (1.0 - pgf.c)
    return PolynomialPgf._unchecked(p), deficit


def pgf_from_dict(d: dict) -> Pgf:
    kind = d.get("type")
    if kind == "polynomial":
        return PolynomialPgf(d["p"])
    if kind == "linear_fractional":
        return LinearFractionalPgf(float(d["b"]), float(d["c"]))
    raise ValueError(f"unknown pgf type {kind!r}")


def pgf_to_dict(pgf: Pgf) -> dict:
    if isinstance(pgf, LinearFractionalPgf):
        return {"type": "linear_fractional", "b": pgf.b, "c": pgf.c}
    return {"type": "polynomial", "p": [float(x) for x in pgf.p]}


def load_pgf(path) -> Pgf:
    with open(Path(path)) as fh:
        return pgf_from_dict(json.load(fh))


def random_offspring_pgf(rng: np.random.Generator, d: int, m: float) -> PolynomialPgf:
    """Random offspring law on ``{0..d}`` with mean exactly ``m``.

    Uniform random weights are normalized and then mixed with a point mass
    at ``d`` (mean too low) or at ``0`` (mean too high).
    """
    if not 0.0 < m < d:
        raise ValueError("need 0 < m < d")
    p = rng.random(d + 1)
    p /= p.sum()
    mu = float(np.dot(np.arange(d + 1), p))
    if mu < m:
        t = (m - mu) / (d - mu)
        p *= 1.0 - t
        p[d] += t
    else:
        t = (mu - m) / mu
        p *= 1.0 - t
        p[0] += t
    return PolynomialPgf(p / p.sum())
