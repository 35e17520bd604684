# %% [markdown]
# # Two bird populations
#
# Offspring laws for the whooping crane and the Chatham Islands black
# robin. For each we fit the law of W and report a 90% prediction interval
# for the population size, together with the time needed to reach 100
# individuals.

# %%
import numpy as np

from gwdensity import (
    EstablishmentQuery, PolynomialPgf, SimConfig, SolverConfig, fit_density, invariants,
    moments_from_coeffs, prediction_interval, simulate_w, solve_newton,
)
from gwdensity.applications import establishment_cdf

birds = {
    "crane": ([0.1538, 0.6491, 0.1971], 100, (0.4, 0.7), 30),
    "robin": ([0.1036, 0.3551, 0.3448, 0.1553, 0.0366, 0.0044, 0.0002], 15, (0.7, 1.0), 10),
}

models = {}
for name, (p, T, tail, n) in birds.items():
    pgf = PolynomialPgf(p)
    inv = invariants(pgf)
    sim = simulate_w(pgf, SimConfig(generations=T, seed=0, tail_fit_range=tail))
    moments = moments_from_coeffs(solve_newton(pgf, SolverConfig(order=80)).phi)
    model = fit_density(moments, inv.q, inv.alpha, sim.beta_hat)
    models[name] = (model, inv.m)
    lo, hi = prediction_interval(model, inv.m, n, 0.9)
    print(f"{name}: m={inv.m:.4f} q={inv.q:.4f} beta={sim.beta_hat:.3f} "
          f"Z_{n} in [{lo:.2f}, {hi:.2f}]")

# %% [markdown]
# Establishment time: tau = log(100 / W) / log m, given survival.

# %%
ts = np.linspace(0, 400, 4001)
for name, (model, m) in models.items():
    cdf = np.maximum.accumulate(np.clip(establishment_cdf(EstablishmentQuery(100.0, model, m), ts), 0, 1))
    med, q90 = ts[np.argmax(cdf >= 0.5)], ts[np.argmax(cdf >= 0.9)]
    print(f"{name}: median {med:.1f} generations, 90% by {q90:.1f}")
