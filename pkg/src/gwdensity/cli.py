"""Command-line front end: ``gwdensity {solve,density,simulate,predict,establish,moments}``.

Exit codes: 0 success, 1 bad input, 2 numerical non-convergence (outputs
are still written).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .applications import (
    EstablishmentQuery,
    establishment_density,
    establishment_pmf,
    exceedance_probability,
    moments_of_sum,
    prediction_interval,
)
from .gwmodel import invariants, load_pgf, mean
from .poincare import Method, SolverConfig, solve
from .reconstruct import (
    DensityModel,
    cdf_at,
    density_at,
    fit_density,
    moments_from_coeffs,
    quantile,
)
from .simulate import SimConfig, simulate_w, write_histogram_csv, write_samples_csv

log = logging.getLogger("gwdensity")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2


class InputError(Exception):
    pass


class Run:
    """Tracks the files a command writes and emits ``manifest.json``."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.extra: dict = {}
        self.started = datetime.now(timezone.utc).isoformat()

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def write_json(self, name: str, obj) -> None:
        self.path(name).write_text(json.dumps(obj, indent=2) + "\n")

    def write_csv(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                            for v in row])

    def finish(self) -> None:
        a = vars(self.args)
        manifest = {
            "version": __version__,
            "command": a["command"],
            "arguments": {k: v for k, v in a.items() if k != "func"},
            "pgf": a.get("pgf"),
            "method": a.get("method"),
            "order": a.get("order"),
            "tol": a.get("tol"),
            "seed": a.get("seed"),
            "outputs": list(self.files),
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            **self.extra,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _pgf(args):
    if not args.pgf:
        raise InputError("--pgf is required")
    try:
        return load_pgf(args.pgf)
    except FileNotFoundError:
        raise InputError(f"pgf file not found: {args.pgf}") from None
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed pgf file {args.pgf}: {exc}") from None


def _solve(args, pgf):
    cfg = SolverConfig(order=args.order, tol=args.tol, max_iters=args.max_iters)
    return solve(pgf, Method(args.method), cfg)


def _sim_config(args, tail=None) -> SimConfig:
    lo = args.tail_lo if args.tail_lo is not None else (tail or (0.7, 1.0))[0]
    hi = args.tail_hi if args.tail_hi is not None else (tail or (0.7, 1.0))[1]
    return SimConfig(replicates=args.sim_reps, generations=args.sim_gens, seed=args.seed,
                     bins=args.bins, tail_fit_range=(lo, hi), workers=args.workers)


def _fit_model(args, pgf, run: Run | None = None):
    """Solve, estimate beta if needed, and fit; returns (model, report, invariants)."""
    try:
        inv = invariants(pgf)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report = _solve(args, pgf)
    moments = moments_from_coeffs(report.phi)
    if args.beta is not None:
        beta, source = args.beta, "user"
    else:
        sim = simulate_w(pgf, _sim_config(args))
        if not np.isfinite(sim.beta_hat) or sim.beta_hat <= 0:
            raise InputError("tail-rate estimation failed; pass --beta")
        beta, source = sim.beta_hat, "estimated"
    model = fit_density(moments, inv.q, inv.alpha, beta)
    if run is not None:
        run.extra["beta"] = beta
        run.extra["beta_source"] = source
    return model, report, inv


def _model(args, pgf, run):
    if getattr(args, "model", None):
        try:
            return DensityModel.load(args.model)
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot read model {args.model}: {exc}") from None
    return _fit_model(args, pgf, run)[0]


def cmd_solve(args) -> int:
    pgf = _pgf(args)
    run = Run(args)
    report = _solve(args, pgf)
    run.write_csv("phi.csv", ["index", "coefficient"], enumerate(report.phi.coeffs))
    run.write_json("report.json", report.to_dict())
    run.finish()
    print(json.dumps({"iterations": report.iterations, "residual": report.final_residual,
                      "converged": report.converged}))
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def cmd_density(args) -> int:
    pgf = _pgf(args)
    run = Run(args)
    model, report, inv = _fit_model(args, pgf, run)
    model.save(run.path("model.json"))
    x_max = quantile(model, 0.999)
    xs = np.linspace(0.0, x_max, args.grid + 1)
    run.write_csv("density.csv", ["x", "density"],
                  zip(xs[1:], np.atleast_1d(density_at(model, xs[1:]))))
    run.write_csv("cdf.csv", ["x", "cdf"], zip(xs, np.atleast_1d(cdf_at(model, xs))))
    run.write_json("report.json", report.to_dict())
    run.finish()
    print(json.dumps({"q": inv.q, "alpha": inv.alpha, "beta": model.beta,
                      "continuous_mass": model.continuous_mass,
                      "mass_error": model.continuous_mass + inv.q - 1.0}))
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def cmd_simulate(args) -> int:
    pgf = _pgf(args)
    run = Run(args)
    sim = simulate_w(pgf, _sim_config(args))
    write_samples_csv(run.path("wsamples.csv"), sim.w_samples)
    write_histogram_csv(run.path("histogram.csv"), sim.bin_edges, sim.counts)
    run.finish()
    print(json.dumps({"beta_hat": sim.beta_hat, "r2": sim.fit_r2,
                      "survived_fraction": sim.survived_fraction}))
    return EXIT_OK


def cmd_predict(args) -> int:
    if not 0.0 < args.level < 1.0:
        raise InputError("--level must lie in (0, 1)")
    pgf = _pgf(args)
    run = Run(args)
    model = _model(args, pgf, run)
    m = mean(pgf)
    lo, hi = prediction_interval(model, m, args.n, args.level)
    out = {"n": args.n, "level": args.level, "interval": [lo, hi]}
    if args.K is not None:
        out["K"] = args.K
        out["exceedance_probability"] = exceedance_probability(model, m, args.n, args.K)
    run.write_json("prediction.json", out)
    run.finish()
    print(json.dumps(out))
    return EXIT_OK


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num))
    except ValueError:
        raise InputError("--t-grid must look like START:STOP:NUM") from None


def cmd_establish(args) -> int:
    pgf = _pgf(args)
    ts = _parse_grid(args.t_grid)
    run = Run(args)
    model = _model(args, pgf, run)
    query = EstablishmentQuery(args.K, model, mean(pgf))
    g = np.atleast_1d(establishment_density(query, ts))
    run.write_csv("tau_density.csv", ["t", "density"], zip(ts, g))
    n_max = max(int(np.ceil(ts[-1])), 0)
    run.write_csv("tau_pmf.csv", ["generation", "probability"],
                  zip(range(n_max + 1), establishment_pmf(query, n_max)))
    run.finish()
    return EXIT_OK


def cmd_moments(args) -> int:
    pgf = _pgf(args)
    run = Run(args)
    report = _solve(args, pgf)
    moments = moments_from_coeffs(report.phi)
    atom = None
    if args.k > 1:
        moments = moments_of_sum(moments, args.k)
        try:
            atom = invariants(pgf).q ** args.k
        except ValueError:
            atom = None
    run.write_csv("moments.csv", ["order", "moment"], enumerate(moments.moments))
    if atom is not None:
        run.extra["atom_at_zero"] = atom
    run.finish()
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def _add_solver(p):
    p.add_argument("--method", choices=[m.value for m in Method], default="newton")
    p.add_argument("--order", type=int, default=80)
    p.add_argument("--tol", type=float, default=None,
                   help="default 1e-14 for newton, 1e-8 for fixed")
    p.add_argument("--max-iters", type=int, default=None)


def _add_sim(p):
    p.add_argument("--sim-reps", type=int, default=100_000)
    p.add_argument("--sim-gens", type=int, default=12)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--tail-lo", type=float, default=None)
    p.add_argument("--tail-hi", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)


def _add_fit(p):
    _add_solver(p)
    _add_sim(p)
    p.add_argument("--beta", type=float, default=None,
                   help="tail rate; skips the simulation when given")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pgf", help="offspring pgf JSON file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gwdensity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="Taylor coefficients of phi")
    _add_solver(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("density", parents=[common], help="fit the density of W")
    _add_fit(p)
    p.add_argument("--grid", type=int, default=500)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo samples of W")
    _add_sim(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", parents=[common], help="prediction interval for Z_n")
    _add_fit(p)
    p.add_argument("--model", help="model.json from the density command")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--level", type=float, default=0.9)
    p.add_argument("--K", type=float, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("establish", parents=[common], help="establishment-time density")
    _add_fit(p)
    p.add_argument("--model", help="model.json from the density command")
    p.add_argument("--K", type=float, default=100.0)
    p.add_argument("--t-grid", default="0:60:601")
    p.set_defaults(func=cmd_establish)

    p = sub.add_parser("moments", parents=[common], help="moments of W or W(k)")
    _add_solver(p)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
