"""Truncated formal power series in one variable.

A series of order ``N`` stores the coefficients of ``z**0 .. z**N``; every
product is silently truncated back to the requested order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# direct convolution is faster than FFT below this length, and exact in
# the sense of plain summation order
_FFT_THRESHOLD = 512


@dataclass(frozen=True)
class TruncatedSeries:
    """Coefficients ``coeffs[j]`` of ``z**j`` for ``j = 0..order``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("a truncated series needs order >= 1")
        if not np.all(np.isfinite(c)):
            raise ValueError("series coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def from_coeffs(cls, coeffs, order: int | None = None) -> "TruncatedSeries":
        """Build a series, zero-padding or truncating ``coeffs`` to ``order``."""
        c = np.asarray(coeffs, dtype=float).ravel()
        if order is None:
            order = max(c.size - 1, 1)
        return cls(_fit(c, order))

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, j):
        return self.coeffs[j]


def _fit(c: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros(order + 1)
    n = min(c.size, order + 1)
    out[:n] = c[:n]
    return out


def _coeffs(s) -> np.ndarray:
    if isinstance(s, TruncatedSeries):
        return s.coeffs
    return np.asarray(s, dtype=float).ravel()


def convolve_trunc(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Cauchy product of two coefficient arrays, truncated to ``order``."""
    a = a[: order + 1]
    b = b[: order + 1]
    if a.size == 0 or b.size == 0:
        return np.zeros(order + 1)
    # canonical operand order makes the product bitwise commutative
    if (a.size, a.tobytes()) > (b.size, b.tobytes()):
        a, b = b, a
    if order + 1 > _FFT_THRESHOLD:
        n = a.size + b.size - 1
        nfft = 1 << (n - 1).bit_length()
        full = np.fft.irfft(np.fft.rfft(a, nfft) * np.fft.rfft(b, nfft), nfft)[:n]
    else:
        full = np.convolve(a, b)
    return _fit(full, order)


def mul(a, b, order: int | None = None) -> TruncatedSeries:
    """Product of two series, keeping coefficients up to ``order``.

    If ``order`` is omitted the smaller of the two input orders is used;
    inputs shorter than ``order`` are treated as zero-padded.
    """
    ca, cb = _coeffs(a), _coeffs(b)
    if order is None:
        order = min(ca.size, cb.size) - 1
    return TruncatedSeries(convolve_trunc(ca, cb, order))


def compose_coeffs(p, s: np.ndarray) -> np.ndarray:
    """Coefficients of ``P(s(z))`` by Horner's rule in the series ring."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("empty polynomial")
    order = s.size - 1
    out = np.zeros(order + 1)
    out[0] = p[-1]
    for pk in p[-2::-1]:
        out = convolve_trunc(out, s, order)
        out[0] += pk
    return out


def compose_poly(p, s: TruncatedSeries) -> TruncatedSeries:
    """First ``s.order + 1`` Taylor coefficients of ``P(s(z))``.

    Parameters
    ----------
    p : array_like
        Polynomial coefficients ``p_0, ..., p_d`` (constant term first).
    s : TruncatedSeries
        Inner series.
    """
    return TruncatedSeries(compose_coeffs(p, _coeffs(s)))


def evaluate(s, z: float) -> float:
    """Horner evaluation of the truncated series at ``z``."""
    c = _coeffs(s)
    acc = 0.0
    for cj in c[::-1]:
        acc = acc * z + cj
    return float(acc)


# the operation is named ``eval`` in the public vocabulary of this library
eval = evaluate  # noqa: A001
