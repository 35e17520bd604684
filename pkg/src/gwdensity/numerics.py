"""Special functions and small dense linear algebra.

Everything here is self-contained so results do not depend on which
special-function library happens to be installed.
"""
from __future__ import annotations

import math

import numpy as np

# Lanczos approximation, g = 607/128, 15 terms (Godfrey)
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

_EPS = 1e-16
_FPMIN = 1e-300


class RankDeficientError(np.linalg.LinAlgError):
    def __init__(self, column: int):
        super().__init__(f"rank-deficient least squares (column {column})")
        self.column = column


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise ValueError("log_gamma needs x > 0")
    if x < 0.5:
        # reflection keeps the series in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for i in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def gamma_ratio_products(alpha: float, N: int) -> np.ndarray:
    """Return ``Gamma(j+1) / Gamma(alpha+j+1)`` for ``j = 0..N``.

    Uses the running product ``r_j = r_{j-1} * j / (j + alpha)`` so only a
    single Gamma evaluation is needed.
    """
    if not alpha > -1.0:
        raise ValueError("alpha must exceed -1")
    out = np.empty(N + 1)
    out[0] = 1.0 if alpha == 0.0 else math.exp(-log_gamma(alpha + 1.0))
    for j in range(1, N + 1):
        out[j] = out[j - 1] * j / (j + alpha)
    return out


def _gser(a, x, gln):
    ap = a
    term = total = 1.0 / a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - gln)


def _gcf(a, x, gln):
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - gln) * h


def reg_lower_incomplete_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``."""
    if not a > 0.0:
        raise ValueError("reg_lower_incomplete_gamma needs a > 0")
    if x < 0.0:
        raise ValueError("reg_lower_incomplete_gamma needs x >= 0")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    gln = log_gamma(a)
    if x < a + 1.0:
        return min(_gser(a, x, gln), 1.0)
    return max(1.0 - _gcf(a, x, gln), 0.0)


def householder_qr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Compact Householder QR of a tall matrix.

    Returns ``(V, tau, R)`` where column ``k`` of ``V`` holds the Householder
    vector of step ``k`` (unit leading entry) and ``H_k = I - tau_k v v^T``.
    """
    R = np.array(A, dtype=float, copy=True)
    r, c = R.shape
    V = np.zeros((r, c))
    tau = np.zeros(c)
    for k in range(min(r, c)):
        x = R[k:, k]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            V[k, k] = 1.0
            continue
        alpha = -math.copysign(normx, x[0])
        v = x.copy()
        v[0] -= alpha
        v /= v[0]
        t = 2.0 / np.dot(v, v)
        R[k:, k:] -= t * np.outer(v, v @ R[k:, k:])
        R[k + 1 :, k] = 0.0
        V[k:, k] = v
        tau[k] = t
    return V, tau, R


def solve_upper_triangular(U: np.ndarray, b) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    y = np.array(b, dtype=float, copy=True)
    n = U.shape[0]
    for i in range(n - 1, -1, -1):
        if U[i, i] == 0.0:
            raise ZeroDivisionError(f"zero diagonal entry at row {i}")
        y[i] = (y[i] - U[i, i + 1 :] @ y[i + 1 :]) / U[i, i]
    return y


def solve_lower_triangular(L: np.ndarray, b) -> np.ndarray:
    """Forward substitution for a square lower-triangular system."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if L.shape != (n, n):
        raise ValueError("solve_lower_triangular needs a square matrix")
    y = np.array(b, dtype=float, copy=True)
    for i in range(n):
        if L[i, i] == 0.0:
            raise ZeroDivisionError(f"zero diagonal entry at row {i}")
        y[i] = (y[i] - L[i, :i] @ y[:i]) / L[i, i]
    return y


def qr_least_squares(A: np.ndarray, b) -> np.ndarray:
    """Minimize ``||A y - b||_2`` for a tall, full-column-rank ``A``.

    Raises
    ------
    RankDeficientError
        If some ``|R_kk|`` falls below ``1e-14 * ||A||_F``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim != 2:
        raise ValueError("A must be two-dimensional")
    r, c = A.shape
    if r < c:
        raise ValueError("least squares needs rows >= columns")
    if b.size != r:
        raise ValueError("right-hand side length does not match A")
    V, tau, R = householder_qr(A)
    thresh = 1e-14 * np.linalg.norm(A)
    for k in range(c):
        if abs(R[k, k]) <= thresh:
            raise RankDeficientError(k)
    qtb = b.copy()
    for k in range(c):
        v = V[k:, k]
        qtb[k:] -= tau[k] * v * np.dot(v, qtb[k:])
    return solve_upper_triangular(R[:c, :c], qtb[:c])
