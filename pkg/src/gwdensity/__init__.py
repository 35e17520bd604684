"""Distribution of the Kesten-Stigum limit of supercritical Galton-Watson processes."""

__version__ = "0.1.0"

from .gwmodel import (  # noqa: E402
    LinearFractionalPgf,
    PolynomialPgf,
    alpha,
    extinction_probability,
    invariants,
    mean,
    random_offspring_pgf,
)
from .poincare import SolverConfig, residual, solve, solve_fixed_point, solve_forward, solve_newton  # noqa: E402
from .reconstruct import (  # noqa: E402
    DensityModel,
    MomentVector,
    cdf_at,
    density_at,
    fit_density,
    moments_from_coeffs,
    quantile,
)
from .simulate import SimConfig, estimate_beta, simulate_w  # noqa: E402
from .applications import (  # noqa: E402
    EstablishmentQuery,
    establishment_density,
    exceedance_probability,
    moments_of_sum,
    prediction_interval,
)
