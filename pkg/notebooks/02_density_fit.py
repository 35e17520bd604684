# %% [markdown]
# # From coefficients to a density
#
# Moments follow from m_i = (-1)^i i! phi_i. The continuous part of the law
# of W is then fitted by a damped Laguerre expansion with exponent alpha
# (known from the offspring law) and tail rate beta (estimated from a
# simulation).

# %%
import numpy as np

from gwdensity import (
    PolynomialPgf, SimConfig, SolverConfig, density_at, fit_density, invariants,
    moments_from_coeffs, simulate_w, solve_newton,
)

pgf = PolynomialPgf([0.1, 0.5, 0.0, 0.2, 0.1, 0.1])
inv = invariants(pgf)
print(f"m={inv.m:.4f} q={inv.q:.4f} alpha={inv.alpha:.4f}")

# %%
sim = simulate_w(pgf, SimConfig(replicates=100_000, generations=12, seed=0))
print(f"beta_hat={sim.beta_hat:.4f} (r2={sim.fit_r2:.3f}), survived={sim.survived_fraction:.4f}")

moments = moments_from_coeffs(solve_newton(pgf, SolverConfig(order=80)).phi)
model = fit_density(moments, inv.q, inv.alpha, sim.beta_hat)
print("continuous mass:", model.continuous_mass, " 1 - q:", 1 - inv.q)

# %% [markdown]
# Compare with the histogram of the surviving replicates.

# %%
edges, counts = sim.histogram
width = edges[1] - edges[0]
centres = 0.5 * (edges[:-1] + edges[1:])
hist = counts / (counts.sum() * width)
fit = density_at(model, centres) / (1 - inv.q)
print("L1 distance:", np.sum(np.abs(fit - hist)) * width)
for x, h, f in list(zip(centres, hist, fit))[:40:4]:
    print(f"x={x:6.3f}  hist={h:6.3f}  fit={f:6.3f}")
