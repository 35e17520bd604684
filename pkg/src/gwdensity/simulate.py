"""Seeded Monte-Carlo simulation of W = Z_T / m**T and tail-rate estimation."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gwmodel import LinearFractionalPgf, Pgf, PolynomialPgf, mean

# replicates are simulated in fixed-size blocks, each with its own
# counter-based stream keyed by (seed, block index)
BLOCK_SIZE = 1000
POPULATION_CAP = 10**9


class PopulationCapError(RuntimeError):
    pass


class TailFitError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    replicates: int = 100_000
    generations: int = 12
    seed: int = 0
    bins: int = 100
    tail_fit_range: tuple[float, float] = (0.7, 1.0)
    workers: int = 1
    cap: int = POPULATION_CAP

    def __post_init__(self):
        if self.replicates < 100:
            raise ValueError("need at least 100 replicates")
        if self.generations < 1:
            raise ValueError("need at least one generation")
        lo, hi = self.tail_fit_range
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError("tail_fit_range must satisfy 0 <= lo < hi <= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class SimOutput:
    w_samples: np.ndarray
    survived_fraction: float
    bin_edges: np.ndarray
    counts: np.ndarray
    beta_hat: float
    fit_r2: float
    extra: dict = field(default_factory=dict)

    @property
    def histogram(self):
        return self.bin_edges, self.counts


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for one block of replicates."""
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def _next_generation(pgf: Pgf, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # the sum of z iid offspring counts, drawn exactly: multinomial counts per
    # offspring value for finite support, binomial-negative-binomial for the
    # modified geometric law
    out = np.zeros_like(z)
    alive = z > 0
    if not alive.any():
        return out
    n = z[alive]
    if isinstance(pgf, PolynomialPgf):
        counts = rng.multinomial(n, pgf.p)
        out[alive] = counts @ np.arange(pgf.p.size)
    else:
        k = rng.binomial(n, pgf.b / (1.0 - pgf.c))
        total = k.copy()
        pos = k > 0
        total[pos] += rng.negative_binomial(k[pos], 1.0 - pgf.c)
        out[alive] = total
    return out


def _simulate_block(pgf: Pgf, cfg: SimConfig, block: int, size: int) -> np.ndarray:
    rng = block_rng(cfg.seed, block)
    z = np.ones(size, dtype=np.int64)
    for _ in range(cfg.generations):
        z = _next_generation(pgf, z, rng)
        if z.size and z.max() > cfg.cap:
            raise PopulationCapError(
                f"population exceeded {cfg.cap}; increase cap or reduce T"
            )
    return z


def simulate_population(pgf: Pgf, cfg: SimConfig) -> np.ndarray:
    """Population sizes ``Z_T`` for every replicate, starting from ``Z_0 = 1``."""
    if isinstance(pgf, PolynomialPgf):
        # sampling from the pgf itself; rounding in p is renormalized away
        pgf = PolynomialPgf._unchecked(pgf.p / pgf.p.sum())
    nblocks = -(-cfg.replicates // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, cfg.replicates - b * BLOCK_SIZE) for b in range(nblocks)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(lambda b: _simulate_block(pgf, cfg, b, sizes[b]),
                                range(nblocks)))
    else:
        parts = [_simulate_block(pgf, cfg, b, sizes[b]) for b in range(nblocks)]
    return np.concatenate(parts)


def positive_histogram(samples, bins: int):
    """Uniform-width histogram of the strictly positive samples over ``[0, max]``."""
    pos = np.asarray(samples, dtype=float)
    pos = pos[pos > 0]
    if pos.size == 0:
        return np.linspace(0.0, 1.0, bins + 1), np.zeros(bins, dtype=np.int64)
    counts, edges = np.histogram(pos, bins=bins, range=(0.0, pos.max()))
    return edges, counts


def estimate_beta(samples, bins: int = 100, fit_range=(0.7, 1.0)) -> tuple[float, float]:
    """Exponential tail rate from a log-linear fit to the upper histogram bins.

    Bins whose centres fall in the ``fit_range`` fraction of the histogram
    range are kept, empty ones dropped, and ``log(count density)`` is
    regressed on the bin centre. Returns ``(-slope, r2)``.
    """
    s = np.asarray(samples, dtype=float)
    pos = s[s > 0]
    if pos.size < 100:
        raise TailFitError("tail fit needs at least 100 positive samples")
    edges, counts = positive_histogram(pos, bins)
    width = edges[1] - edges[0]
    centres = 0.5 * (edges[:-1] + edges[1:])
    lo, hi = fit_range
    span = edges[-1] - edges[0]
    sel = (centres >= edges[0] + lo * span) & (centres <= edges[0] + hi * span) & (counts > 0)
    if sel.sum() < 3:
        raise TailFitError("tail fit underdetermined")
    x = centres[sel]
    y = np.log(counts[sel] / (s.size * width))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - fitted) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), float(r2)


def simulate_w(pgf: Pgf, cfg: SimConfig = SimConfig()) -> SimOutput:
    """Samples of ``Z_T / m**T`` (zeros included), histogram and fitted tail rate."""
    m = mean(pgf)
    if not m > 1.0:
        raise ValueError("mean offspring <= 1")
    z = simulate_population(pgf, cfg)
    w = z / m**cfg.generations
    edges, counts = positive_histogram(w, cfg.bins)
    try:
        beta_hat, r2 = estimate_beta(w, cfg.bins, cfg.tail_fit_range)
    except TailFitError:
        beta_hat, r2 = float("nan"), float("nan")
    return SimOutput(
        w_samples=w,
        survived_fraction=float(np.mean(z > 0)),
        bin_edges=edges,
        counts=counts,
        beta_hat=beta_hat,
        fit_r2=r2,
    )


def write_samples_csv(path, w: np.ndarray) -> None:
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["w"])
        out.writerows([repr(float(v))] for v in w)


def write_histogram_csv(path, edges: np.ndarray, counts: np.ndarray) -> None:
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["left", "right", "count"])
        for a, b, c in zip(edges[:-1], edges[1:], counts):
            out.writerow([repr(float(a)), repr(float(b)), int(c)])
