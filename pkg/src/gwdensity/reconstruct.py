"""Moment-matched Laguerre expansion of the density of W.

The continuous part of the law of W is approximated by

    f_S(x) = sum_j c_j L_j^(alpha)(beta x) (beta x)^alpha exp(-beta x),

with an atom of mass ``q`` at zero. Matching the first ``N + 1`` moments
reduces, after a diagonal change of variables, to a least-squares problem
with the lower-triangular binomial matrix ``M[i, j] = C(i, j)``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import (
    gamma_ratio_products,
    log_gamma,
    qr_least_squares,
    reg_lower_incomplete_gamma,
)
from .series import TruncatedSeries

MAX_MOMENT_ORDER = 170


class InvalidMomentsError(ValueError):
    pass


class MassWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MomentVector:
    """Raw moments ``E[X**i]`` for ``i = 0..N`` of a probability law.

    ``m_0 = 1`` is enforced. ``m_1 = 1`` holds for W itself but not for
    sums of independent copies, so it is not checked here.
    """

    moments: np.ndarray

    def __post_init__(self):
        mom = np.array(self.moments, dtype=float).ravel()
        if mom.size < 2 or not np.all(np.isfinite(mom)) or np.any(mom <= 0):
            raise InvalidMomentsError("invalid moment sequence")
        if abs(mom[0] - 1.0) > 1e-12:
            raise InvalidMomentsError("m_0 must equal 1")
        mom.setflags(write=False)
        object.__setattr__(self, "moments", mom)

    @property
    def order(self) -> int:
        return self.moments.size - 1

    def __getitem__(self, i):
        return self.moments[i]


@dataclass(frozen=True)
class DensityModel:
    """Atom ``atom_q`` at zero plus a damped Laguerre expansion."""

    atom_q: float
    alpha: float
    beta: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("density model needs at least one coefficient")
        if not 0.0 <= self.atom_q < 1.0:
            raise ValueError("atom_q must lie in [0, 1)")
        if not self.alpha > -1.0 or not self.beta > 0.0:
            raise ValueError("need alpha > -1 and beta > 0")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def continuous_mass(self) -> float:
        # only the j = 0 basis function carries mass
        return float(self.coeffs[0] * math.exp(log_gamma(self.alpha + 1.0)) / self.beta)

    def to_dict(self) -> dict:
        return {
            "q": float(self.atom_q),
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "coeffs": [float(c) for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityModel":
        return cls(float(d["q"]), float(d["alpha"]), float(d["beta"]), d["coeffs"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "DensityModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def moments_from_coeffs(phi: TruncatedSeries) -> MomentVector:
    """``m_i = (-1)**i i! phi_i``."""
    c = phi.coeffs if isinstance(phi, TruncatedSeries) else np.asarray(phi, float)
    n = c.size
    if n - 1 > MAX_MOMENT_ORDER:
        raise InvalidMomentsError(
            f"order {n - 1} exceeds {MAX_MOMENT_ORDER}; i! overflows"
        )
    out = np.empty(n)
    fact = 1.0
    for i in range(n):
        if i:
            fact *= i
        out[i] = (-1) ** i * fact * c[i]
    return MomentVector(out)


def laguerre_eval(j: int, alpha: float, x):
    """Generalized Laguerre polynomial ``L_j^(alpha)(x)`` by three-term recurrence."""
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if j == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(2, j + 1):
        prev, cur = cur, ((2 * k + alpha - 1 - x) * cur - (k + alpha - 1) * prev) / k
    return cur if cur.ndim else float(cur)


def laguerre_table(S: int, alpha: float, x) -> np.ndarray:
    """Rows ``L_0 .. L_S`` evaluated at ``x``; shape ``(S + 1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((S + 1,) + x.shape)
    out[0] = 1.0
    if S >= 1:
        out[1] = 1.0 + alpha - x
    for k in range(2, S + 1):
        out[k] = ((2 * k + alpha - 1 - x) * out[k - 1] - (k + alpha - 1) * out[k - 2]) / k
    return out


def pascal_matrix(N: int, S: int) -> np.ndarray:
    """``(N+1) x (S+1)`` matrix of binomials ``C(i, j)``, zero above the diagonal."""
    if S > N:
        raise ValueError("need N >= S")
    M = np.zeros((N + 1, S + 1))
    M[:, 0] = 1.0
    for i in range(1, N + 1):
        M[i, 1:] = M[i - 1, 1:] + M[i - 1, :-1]
    return M


def row_scaling(M: np.ndarray) -> np.ndarray:
    """Largest entry of each row of ``M``."""
    return M.max(axis=1)


def rhs_vector(moments: MomentVector, q: float, alpha: float, beta: float) -> np.ndarray:
    """Right-hand side ``b_i = beta**(i+1) m_i / Gamma(alpha + i + 1)``.

    Row zero uses the continuous mass ``1 - q`` in place of ``m_0``.
    """
    if not beta > 0 or not alpha > -1:
        raise ValueError("need beta > 0 and alpha > -1")
    mom = moments.moments
    N = mom.size - 1
    if (N + 1) * math.log(beta) > 700.0:
        raise OverflowError("rhs overflow; reduce N or rescale")
    ratio = gamma_ratio_products(alpha, N)
    # Gamma(i+1)/Gamma(alpha+i+1) * m_i / i!, with m_i / i! formed incrementally
    scaled = np.empty(N + 1)
    inv_fact = 1.0
    for i in range(N + 1):
        if i:
            inv_fact /= i
        scaled[i] = mom[i] * inv_fact
    scaled[0] = 1.0 - q
    b = beta ** np.arange(1, N + 2, dtype=float) * ratio * scaled
    if not np.all(np.isfinite(b)):
        raise OverflowError("rhs overflow; reduce N or rescale")
    return b


def basis_moment_matrix(N: int, S: int, alpha: float, beta: float) -> np.ndarray:
    """Moments of the basis functions in closed form.

    Entry ``(i, j)`` is ``int x**i (beta x)**alpha L_j(beta x) exp(-beta x) dx``
    ``= (-1)**j beta**(-i-1) Gamma(alpha+i+1) C(i, j)``.
    """
    i = np.arange(N + 1)
    lg = np.array([log_gamma(alpha + k + 1.0) for k in i])
    diag = np.exp(lg - (i + 1) * math.log(beta))
    signs = (-1.0) ** np.arange(S + 1)
    return diag[:, None] * pascal_matrix(N, S) * signs[None, :]


def default_basis_size(N: int) -> int:
    """Number of basis functions ``S + 1 = floor((N + 1) / 2)``."""
    return max((N + 1) // 2, 1)


def fit_density(moments: MomentVector, q: float, alpha: float, beta: float,
                n_basis: int | None = None) -> DensityModel:
    """Least-squares moment matching with row-scaled binomial matrix.

    Parameters
    ----------
    moments : MomentVector
        ``E[W**i]`` for ``i = 0..N``.
    q, alpha, beta : float
        Atom at zero, exponent near zero and exponential tail rate.
    n_basis : int, optional
        Number of Laguerre terms ``S + 1``; defaults to ``floor((N+1)/2)``.
    """
    N = moments.order
    S = (n_basis if n_basis is not None else default_basis_size(N)) - 1
    M = pascal_matrix(N, S)
    d = row_scaling(M)
    b = rhs_vector(moments, q, alpha, beta)
    y = qr_least_squares(M / d[:, None], b / d)
    c = y * (-1.0) ** np.arange(S + 1)
    model = DensityModel(float(q), float(alpha), float(beta), c)
    gap = abs(model.continuous_mass - (1.0 - q))
    if gap > 1e-3:
        warnings.warn(f"fitted continuous mass off by {gap:.3g}", MassWarning, stacklevel=2)
    return model


def density_at(model: DensityModel, x):
    """Continuous part of the fitted density at ``x > 0`` (not clamped)."""
    x = np.asarray(x, dtype=float)
    u = model.beta * x
    with np.errstate(over="ignore", invalid="ignore"):
        L = laguerre_table(model.coeffs.size - 1, model.alpha, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(u > 0, np.exp(model.alpha * np.log(np.where(u > 0, u, 1.0)) - u), 0.0)
        if model.alpha < 0:
            weight = np.where(u > 0, weight, np.inf)
        elif model.alpha == 0:
            weight = np.where(u > 0, weight, 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.tensordot(model.coeffs, L, axes=1) * weight
    # far in the tail the polynomial part overflows where the weight is 0
    out = np.where(weight == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def _raw_cdf(model: DensityModel, x: float) -> float:
    if x <= 0.0:
        return model.atom_q
    a, beta = model.alpha, model.beta
    u = beta * x
    c = model.coeffs
    # j = 0 term: incomplete gamma; j >= 1 terms use the antiderivative
    # d/du [u^(a+1) e^-u L_{j-1}^(a+1)(u)] = j u^a e^-u L_j^(a)(u)
    total = c[0] * math.exp(log_gamma(a + 1.0)) * reg_lower_incomplete_gamma(a + 1.0, u)
    prefactor = math.exp((a + 1.0) * math.log(u) - u)
    if c.size > 1 and prefactor > 0.0:
        L = laguerre_table(c.size - 2, a + 1.0, u)
        j = np.arange(1, c.size)
        total += prefactor * float(np.sum(c[1:] * L / j))
    return model.atom_q + total / beta


def cdf_at(model: DensityModel, x):
    """Distribution function of the fitted law (atom included), clamped to [0, 1].

    A truncated expansion can dip below zero, so the raw value need not be
    monotone; see :func:`quantile` for the monotone version.
    """
    if np.ndim(x) == 0:
        if math.isinf(x):
            return 1.0
        return min(max(_raw_cdf(model, float(x)), 0.0), 1.0)
    return np.array([cdf_at(model, float(t)) for t in np.ravel(x)]).reshape(np.shape(x))


def conditional_cdf(model: DensityModel, x):
    """``F_+(x) = (F(x) - q) / (1 - q)``, the law of W given W > 0."""
    return (np.asarray(cdf_at(model, x)) - model.atom_q) / (1.0 - model.atom_q)


def _upper_bracket(model: DensityModel, p: float) -> float:
    hi = 1.0 / model.beta
    while conditional_cdf(model, hi) <= p:
        hi *= 2.0
        if hi > 1e6 / model.beta:
            raise ValueError("quantile bracket did not close; fitted CDF never reaches p")
    return hi


def quantile(model: DensityModel, p: float, grid: int = 2000) -> float:
    """``p``-quantile of ``W | W > 0`` under the fitted model.

    Uses the monotone envelope ``sup_{t <= x} F_+(t)``: the smallest grid
    point where it reaches ``p`` brackets the answer, then bisection
    refines to ``|F_+(Q) - p| <= 1e-10``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    hi = _upper_bracket(model, p)
    xs = np.linspace(0.0, hi, grid + 1)
    env = np.maximum.accumulate(conditional_cdf(model, xs))
    k = int(np.argmax(env >= p))
    lo, hi = xs[max(k - 1, 0)], xs[k]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = float(conditional_cdf(model, mid))
        if abs(fm - p) <= 1e-10 or hi - lo <= 1e-15 * max(hi, 1.0):
            return mid
        if fm < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
