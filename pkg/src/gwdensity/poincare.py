"""Taylor coefficients of the Laplace-Stieltjes transform of W.

The transform ``phi(z) = E[exp(-z W)]`` solves ``phi(m z) = P(phi(z))`` with
``phi(0) = 1`` and ``phi'(0) = -1``. Three solvers are provided: a direct
forward recursion, the contraction ``phi <- P(phi(z/m))`` and Newton's method
on the coefficient equations.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gwmodel import (
    LinearFractionalPgf,
    NotSupercriticalError,
    Pgf,
    PolynomialPgf,
    mean,
    pgf_apply_coeffs,
    pgf_derivative_apply_coeffs,
    truncate_to_polynomial,
)
from .numerics import solve_lower_triangular
from .series import TruncatedSeries

_DEFAULTS = {
    "forward": (0.0, 0),
    "fixed": (1e-8, 10_000),
    "newton": (1e-14, 50),
}


class Method(str, enum.Enum):
    FORWARD = "forward"
    FIXED_POINT = "fixed"
    NEWTON = "newton"


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings; ``tol`` and ``max_iters`` default per method."""

    order: int = 80
    tol: float | None = None
    max_iters: int | None = None
    initial: TruncatedSeries | None = None

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be at least 2")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.initial is not None:
            c = self.initial.coeffs
            if c[0] != 1.0 or c[1] != -1.0:
                raise ValueError("initial series must start 1 - z")

    def initial_coeffs(self) -> np.ndarray:
        phi = np.zeros(self.order + 1)
        if self.initial is None:
            phi[:2] = (1.0, -1.0)
        else:
            n = min(self.initial.coeffs.size, self.order + 1)
            phi[:n] = self.initial.coeffs[:n]
        return phi

    def resolved(self, method: Method) -> tuple[float, int]:
        tol, iters = _DEFAULTS[method.value]
        return (self.tol if self.tol is not None else tol,
                self.max_iters if self.max_iters is not None else iters)


@dataclass
class SolveReport:
    phi: TruncatedSeries
    iterations: int
    final_residual: float
    method: Method
    residual_history: list[float] = field(default_factory=list)
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "order": self.phi.order,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "residual_history": list(self.residual_history),
        }


def _residual_from(phi: np.ndarray, r: np.ndarray, m: float) -> float:
    scaled = m ** np.arange(phi.size) * phi
    out = np.empty(phi.size)
    tiny = np.abs(r) < 1e-300
    out[~tiny] = np.abs(1.0 - scaled[~tiny] / r[~tiny])
    out[tiny] = np.abs(scaled[tiny] - r[tiny])
    return float(out.max())


def residual(phi: TruncatedSeries, pgf: Pgf) -> float:
    """Max over ``j`` of ``|1 - m^j phi_j / (P(phi))_j|``.

    Where ``|(P(phi))_j| < 1e-300`` the absolute difference is used instead.
    """
    c = phi.coeffs
    return _residual_from(c, pgf_apply_coeffs(pgf, c), mean(pgf))


def _supercritical_mean(pgf: Pgf) -> float:
    m = mean(pgf)
    if not m > 1.0:
        raise NotSupercriticalError("mean offspring <= 1")
    return m


def as_polynomial(pgf: Pgf, order: int) -> PolynomialPgf:
    """Polynomial stand-in for the iterative solvers.

    Linear-fractional laws are truncated to ``order + 1`` terms; a warning is
    issued when the dropped mass exceeds 1e-12.
    """
    if isinstance(pgf, PolynomialPgf):
        return pgf
    poly, deficit = truncate_to_polynomial(pgf, order + 1)
    if deficit > 1e-12:
        warnings.warn(
            f"linear-fractional pgf truncated to {order + 1} terms; "
            f"missing mass {deficit:.3g}",
            TruncationWarning,
            stacklevel=3,
        )
    return poly


def solve_forward(pgf: Pgf, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Recover ``phi_2, ..., phi_N`` one at a time.

    Coefficient ``k`` enters the ``z**k`` equation linearly with factor
    ``m**k - P'(1)``, so it follows from the composition of ``P`` with the
    already known prefix. Works for any pgf that can be composed with a
    series, including linear-fractional ones.
    """
    m = _supercritical_mean(pgf)
    N = cfg.order
    phi = np.zeros(N + 1)
    phi[:2] = (1.0, -1.0)
    # P'(phi(0)) = P'(1) = m
    for k in range(2, N + 1):
        head = phi[: k + 1].copy()
        head[k] = 0.0
        num = pgf_apply_coeffs(pgf, head)[k]
        den = m**k - m
        if abs(den) < 1e-300:
            raise ZeroDivisionError("degenerate recursion")
        phi[k] = num / den
    res = _residual_from(phi, pgf_apply_coeffs(pgf, phi), m)
    return SolveReport(TruncatedSeries(phi), 0, res, Method.FORWARD, [res], True)


def solve_fixed_point(pgf: Pgf, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Iterate ``phi <- D^{-1} P(phi)`` with ``D = diag(m**j)``.

    ``iterations`` counts loop passes; each pass evaluates ``P(phi)`` once,
    tests the current iterate and, if it is not yet accepted, updates it.
    """
    if isinstance(pgf, LinearFractionalPgf):
        pgf = as_polynomial(pgf, cfg.order)
    m = _supercritical_mean(pgf)
    tol, max_iters = cfg.resolved(Method.FIXED_POINT)
    inv_scale = m ** -np.arange(cfg.order + 1, dtype=float)

    # one pass = one evaluation of P(phi), which serves both the convergence
    # test of the current iterate and the update
    phi = cfg.initial_coeffs()
    history: list[float] = []
    best = (np.inf, phi)
    for k in range(1, max_iters + 1):
        r = pgf_apply_coeffs(pgf, phi)
        res = _residual_from(phi, r, m)
        history.append(res)
        if res < best[0]:
            best = (res, phi)
        if res <= tol:
            return SolveReport(TruncatedSeries(phi), k, res, Method.FIXED_POINT, history)
        phi = r * inv_scale
        phi[:2] = (1.0, -1.0)
    return SolveReport(TruncatedSeries(best[1]), max_iters, best[0],
                       Method.FIXED_POINT, history, converged=False)


def newton_matrix(gamma: np.ndarray, m: float, N: int) -> np.ndarray:
    """Lower-triangular Jacobian for the unknowns ``phi_2..phi_N``.

    Diagonal ``m**(i+2) - gamma_0`` and Toeplitz band ``-gamma_{i-j}`` below.
    """
    n = N - 1
    idx = np.arange(n)
    lag = idx[:, None] - idx[None, :]
    J = np.where(lag >= 0, -gamma[np.clip(lag, 0, None)], 0.0)
    J[idx, idx] += m ** (idx + 2.0)
    return J


def solve_newton(pgf: Pgf, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Newton's method on ``phi(m z) - P(phi(z)) = 0`` for ``phi_2..phi_N``."""
    if isinstance(pgf, LinearFractionalPgf):
        pgf = as_polynomial(pgf, cfg.order)
    m = _supercritical_mean(pgf)
    tol, max_iters = cfg.resolved(Method.NEWTON)
    N = cfg.order
    scale = m ** np.arange(2, N + 1, dtype=float)

    phi = cfg.initial_coeffs()
    history: list[float] = []
    best = (np.inf, phi)
    for k in range(1, max_iters + 1):
        r = pgf_apply_coeffs(pgf, phi)
        res = _residual_from(phi, r, m)
        history.append(res)
        if res < best[0]:
            best = (res, phi)
        if res <= tol:
            return SolveReport(TruncatedSeries(phi), k, res, Method.NEWTON, history)
        gamma = pgf_derivative_apply_coeffs(pgf, phi)
        J = newton_matrix(gamma, m, N)
        if np.any(np.abs(np.diag(J)) < 1e-300):
            raise ZeroDivisionError("singular Newton matrix")
        F = scale * phi[2:] - r[2:]
        phi = phi.copy()
        phi[2:] -= solve_lower_triangular(J, F)
        phi[:2] = (1.0, -1.0)
    return SolveReport(TruncatedSeries(best[1]), max_iters, best[0],
                       Method.NEWTON, history, converged=False)


def solve(pgf: Pgf, method: str | Method = Method.NEWTON,
          cfg: SolverConfig = SolverConfig()) -> SolveReport:
    method = Method(method)
    if method is Method.FORWARD:
        return solve_forward(pgf, cfg)
    if method is Method.FIXED_POINT:
        return solve_fixed_point(pgf, cfg)
    return solve_newton(pgf, cfg)
