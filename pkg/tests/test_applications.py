import math

import numpy as np
import pytest
from scipy import integrate

from conftest import CRANE, ROBIN
from gwdensity.applications import (
    EstablishmentQuery,
    establishment_cdf,
    establishment_density,
    establishment_pmf,
    exceedance_probability,
    moments_of_sum,
    prediction_interval,
)
from gwdensity.gwmodel import PolynomialPgf, invariants
from gwdensity.poincare import SolverConfig, solve_newton
from gwdensity.reconstruct import DensityModel, MomentVector, fit_density, moments_from_coeffs

EXP_MODEL = DensityModel(0.0, 0.0, 1.0, [1.0])


def bird_model(p, beta):
    pgf = PolynomialPgf(p)
    inv = invariants(pgf)
    mom = moments_from_coeffs(solve_newton(pgf, SolverConfig(order=80)).phi)
    return fit_density(mom, inv.q, inv.alpha, beta), inv.m


def test_establishment_density_value():
    query = EstablishmentQuery(100.0, EXP_MODEL, 2.0)
    t = math.log2(100)
    assert establishment_density(query, t) == pytest.approx(math.exp(-1) * math.log(2), rel=1e-12)
    assert establishment_density(query, t) == pytest.approx(0.2550, abs=5e-5)


def test_establishment_density_integrates_to_one():
    query = EstablishmentQuery(100.0, EXP_MODEL, 2.0)
    total = integrate.quad(lambda t: establishment_density(query, t), -20, 60, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_establishment_cdf_matches_integral():
    query = EstablishmentQuery(50.0, DensityModel(0.3, 0.5, 1.5, [0.7 * 1.5 / math.gamma(1.5), 0.05]), 1.7)
    ts = np.linspace(-5, 30, 15)
    cdf = establishment_cdf(query, ts)
    assert np.all(np.diff(cdf) >= -1e-12)
    for t, c in zip(ts, cdf):
        head = integrate.quad(lambda s: establishment_density(query, s), -60, t, limit=200)[0]
        assert head == pytest.approx(c, abs=1e-4)


def test_establishment_pmf_sums_to_one():
    query = EstablishmentQuery(100.0, EXP_MODEL, 2.0)
    pmf = establishment_pmf(query, 60)
    assert np.all(pmf >= -1e-15)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-9)


def test_query_validation():
    with pytest.raises(ValueError):
        EstablishmentQuery(0.0, EXP_MODEL, 2.0)
    with pytest.raises(ValueError):
        EstablishmentQuery(10.0, EXP_MODEL, 1.0)


def test_prediction_interval_exponential():
    lo, hi = prediction_interval(EXP_MODEL, 2.0, 1, 0.9)
    assert lo == pytest.approx(2 * -math.log(0.95), abs=1e-8)
    assert hi == pytest.approx(2 * -math.log(0.05), abs=1e-8)
    assert (round(lo, 4), round(hi, 4)) == (0.1026, 5.9915)


@pytest.mark.parametrize("level", [0.5, 0.9, 0.99])
def test_prediction_interval_brackets(level):
    model = DensityModel(0.2, -0.3, 1.2, [0.8 * 1.2 / math.gamma(0.7), -0.1, 0.05])
    lo, hi = prediction_interval(model, 1.5, 4, level)
    tail = (1 - level) / 2
    assert exceedance_probability(model, 1.5, 4, hi) == pytest.approx(tail, abs=1e-6)
    assert exceedance_probability(model, 1.5, 4, lo) == pytest.approx(1 - tail, abs=1e-6)


def test_prediction_interval_validation():
    with pytest.raises(ValueError):
        prediction_interval(EXP_MODEL, 2.0, 1, 1.0)
    with pytest.raises(ValueError):
        prediction_interval(EXP_MODEL, 2.0, -1, 0.9)


def test_exceedance_examples():
    assert exceedance_probability(EXP_MODEL, 2.0, 5, 32.0) == pytest.approx(math.exp(-1), abs=1e-12)
    assert exceedance_probability(EXP_MODEL, 2.0, 5, 1e-12) == pytest.approx(1.0, abs=1e-12)
    assert exceedance_probability(EXP_MODEL, 2.0, 5, 50 * 32.0) <= 1e-5
    with pytest.raises(ValueError):
        exceedance_probability(EXP_MODEL, 2.0, 5, 0.0)


def test_moments_of_sum_examples():
    ones = MomentVector(np.ones(11))
    np.testing.assert_array_equal(moments_of_sum(ones, 1).moments, ones.moments)
    np.testing.assert_allclose(moments_of_sum(ones, 2).moments, 2.0 ** np.arange(11), rtol=1e-15)
    fact = MomentVector([math.factorial(i) for i in range(16)])
    np.testing.assert_allclose(moments_of_sum(fact, 2).moments,
                               [math.factorial(i + 1) for i in range(16)], rtol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3, 7])
def test_moments_of_sum_invariants(k):
    # Gamma(k, 1) moments are (k)_n
    fact = MomentVector([math.factorial(i) for i in range(12)])
    out = moments_of_sum(fact, k).moments
    assert out[0] == 1.0 and out[1] == pytest.approx(k, rel=1e-15)
    rising = [math.prod(range(k, k + n)) for n in range(12)]
    np.testing.assert_allclose(out, rising, rtol=1e-13)


def test_moments_of_sum_overflow():
    big = MomentVector([math.factorial(i) for i in range(171)])
    with pytest.raises(ValueError, match="reduce N or k"):
        moments_of_sum(big, 5)
    with pytest.raises(ValueError):
        moments_of_sum(big, 0)


def test_bird_establishment_times():
    crane, m_c = bird_model(CRANE, 0.246)
    robin, m_r = bird_model(ROBIN, 0.543)
    q90 = {}
    for name, model, m in [("crane", crane, m_c), ("robin", robin, m_r)]:
        query = EstablishmentQuery(100.0, model, m)
        total = integrate.quad(lambda t: establishment_density(query, t), -50, 400, limit=500)[0]
        assert total == pytest.approx(1.0, abs=0.02)
        ts = np.linspace(-50, 400, 9001)
        cdf = np.maximum.accumulate(np.clip(establishment_cdf(query, ts), 0, 1))
        q90[name] = ts[np.argmax(cdf >= 0.9)]
    assert q90["crane"] > q90["robin"]
