import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import P3, TEST_PGFS, exp_taylor, power_pgf
from gwdensity.gwmodel import (
    LinearFractionalPgf,
    NotSupercriticalError,
    PolynomialPgf,
    mean,
    pgf_derivative_apply_coeffs,
    random_offspring_pgf,
)
from gwdensity.poincare import (
    Method,
    SolverConfig,
    TruncationWarning,
    newton_matrix,
    residual,
    solve,
    solve_fixed_point,
    solve_forward,
    solve_newton,
)
from gwdensity.series import TruncatedSeries

SOLVERS = [solve_forward, solve_fixed_point, solve_newton]


def max_rel(a, b):
    return float(np.max(np.abs(a - b) / np.abs(b)))


def test_residual_exact_solution():
    phi = TruncatedSeries(exp_taylor(20))
    assert residual(phi, power_pgf(2)) < 1e-13


def test_residual_hand_computed():
    phi = TruncatedSeries.from_coeffs([1.0, -1.0], order=2)
    assert residual(phi, power_pgf(2)) == pytest.approx(1.0)


@pytest.mark.parametrize("solver", SOLVERS)
@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_power_pgf_oracle(solver, d):
    cfg = SolverConfig(order=40, tol=1e-14)
    rep = solver(power_pgf(d), cfg)
    assert max_rel(rep.phi.coeffs, exp_taylor(40)) <= 1e-12


def test_forward_quadratic_hand_value():
    rep = solve_forward(PolynomialPgf([0.0, 0.5, 0.5]), SolverConfig(order=2))
    assert rep.phi.coeffs[2] == pytest.approx(2 / 3, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.4), st.floats(0.05, 1.0))
def test_forward_quadratic_closed_form(p0, frac2):
    p2 = (1 - p0) * frac2
    p1 = 1 - p0 - p2
    pgf = PolynomialPgf([p0, p1, p2])
    m = mean(pgf)
    if m <= 1.01:
        return
    phi2 = solve_forward(pgf, SolverConfig(order=4)).phi.coeffs[2]
    assert abs(phi2 - p2 / (m * m - m)) <= 1e-14 * max(1.0, abs(phi2))


@pytest.mark.parametrize("c", [0.7, 0.9])
def test_forward_linear_fractional(c):
    rep = solve_forward(LinearFractionalPgf(1 - c, c), SolverConfig(order=80))
    target = (-1.0) ** np.arange(81)
    assert np.max(np.abs(rep.phi.coeffs - target)) <= 1e-10


def test_newton_stagnates_on_truncated_linear_fractional():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        rep = solve_newton(LinearFractionalPgf(0.1, 0.9), SolverConfig(order=79))
    assert not rep.converged
    assert rep.final_residual > 1e-6


def test_truncation_warning():
    with pytest.warns(TruncationWarning):
        solve_fixed_point(LinearFractionalPgf(0.1, 0.9), SolverConfig(order=20, max_iters=3))


def test_fixed_point_from_exact_start():
    cfg = SolverConfig(order=20, initial=TruncatedSeries(exp_taylor(20)))
    rep = solve_fixed_point(power_pgf(2), cfg)
    assert rep.iterations == 1 and rep.final_residual < 1e-13


def test_p3_fixed_point_and_newton():
    pgf = PolynomialPgf(P3)
    fp = solve_fixed_point(pgf, SolverConfig(order=100, tol=1e-15))
    nt = solve_newton(pgf, SolverConfig(order=100, tol=1e-14))
    assert fp.converged and nt.converged
    assert 25 <= fp.iterations <= 30
    assert nt.iterations <= 6
    assert nt.final_residual <= 1e-14
    assert max_rel(nt.phi.coeffs, fp.phi.coeffs) <= 1e-13


@pytest.mark.parametrize("name", sorted(TEST_PGFS))
def test_solvers_agree(name):
    pgf = PolynomialPgf(TEST_PGFS[name])
    if mean(pgf) < 1.25:
        pytest.skip("mean below 1.25")
    ref = solve_forward(pgf, SolverConfig(order=80)).phi.coeffs
    fp = solve_fixed_point(pgf, SolverConfig(order=80, tol=1e-15, max_iters=20000)).phi.coeffs
    nt = solve_newton(pgf, SolverConfig(order=80)).phi.coeffs
    for other in (fp, nt):
        assert max_rel(other, ref) <= 1e-10


@pytest.mark.parametrize("name", sorted(TEST_PGFS))
def test_final_residual_invariant(name):
    pgf = PolynomialPgf(TEST_PGFS[name])
    for method in Method:
        rep = solve(pgf, method, SolverConfig(order=60))
        assert rep.final_residual == residual(rep.phi, pgf)
        assert rep.residual_history[-1] == rep.final_residual


@pytest.mark.parametrize("name", sorted(TEST_PGFS))
def test_fixed_point_rate(name):
    pgf = PolynomialPgf(TEST_PGFS[name])
    m = mean(pgf)
    rep = solve_fixed_point(pgf, SolverConfig(order=60, tol=1e-13, max_iters=20000))
    h = np.array(rep.residual_history)
    ratios = h[1:] / h[:-1]
    tail = ratios[len(ratios) // 2:]
    assert abs(np.median(tail) * m - 1) <= 0.1


def test_newton_superlinear(test_pgf):
    rep = solve_newton(test_pgf, SolverConfig(order=80, tol=1e-14))
    prev, last = rep.residual_history[-2:]
    # quadratic step into the rounding floor
    assert prev < 1e-3
    assert last <= 100 * prev**2 + 1e-15
    assert rep.iterations <= 8


def test_gamma0_equals_mean(test_pgf):
    rep = solve_forward(test_pgf, SolverConfig(order=30))
    gamma = pgf_derivative_apply_coeffs(test_pgf, rep.phi.coeffs)
    assert gamma[0] == pytest.approx(mean(test_pgf), rel=1e-14)


def test_second_coefficient_is_half_second_moment(test_pgf):
    # E[W^2] = 1 + Var(Z1)/(m^2 - m)
    p = np.asarray(test_pgf.p)
    k = np.arange(p.size)
    m = float(k @ p)
    var = float(k**2 @ p) - m * m
    phi = solve_forward(test_pgf, SolverConfig(order=4)).phi.coeffs
    assert 2 * phi[2] == pytest.approx(1 + var / (m * m - m), rel=1e-13)


def test_newton_matrix_shape():
    gamma = np.array([2.0, 0.5, 0.25, 0.1])
    J = newton_matrix(gamma, 2.0, 4)
    expected = np.array([[4 - 2, 0, 0], [-0.5, 8 - 2, 0], [-0.25, -0.5, 16 - 2]])
    np.testing.assert_allclose(J, expected)


def test_non_converged_returns_best_iterate():
    pgf = PolynomialPgf(P3)
    rep = solve_fixed_point(pgf, SolverConfig(order=50, tol=1e-15, max_iters=5))
    assert not rep.converged
    assert rep.iterations == 5
    assert rep.final_residual == min(rep.residual_history)


def test_subcritical_rejected():
    with pytest.raises(NotSupercriticalError):
        solve_newton(PolynomialPgf([0.5, 0.0, 0.5]))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(order=1)
    with pytest.raises(ValueError):
        SolverConfig(tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(initial=TruncatedSeries.from_coeffs([1.0, 1.0]))


def test_report_to_dict():
    d = solve_newton(PolynomialPgf(P3), SolverConfig(order=20)).to_dict()
    assert d["method"] == "newton" and d["order"] == 20 and d["converged"]


@pytest.mark.parametrize("d,m,fixed", [(5, 1.25, 99), (10, 2.0, 35), (20, 3.0, 23)])
def test_random_pgf_iteration_counts(d, m, fixed):
    rng = np.random.default_rng(7)
    pgf = random_offspring_pgf(rng, d, m)
    assert mean(pgf) == pytest.approx(m, rel=1e-12)
    fp = solve_fixed_point(pgf, SolverConfig(order=100, tol=1e-8))
    nt = solve_newton(pgf, SolverConfig(order=100, tol=1e-8))
    assert abs(fp.iterations - fixed) <= 4
    assert 4 <= nt.iterations <= 7
