"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import RunConfig, load_config
from .errors import (BracketError, MondeqError, NoCompactSupportError, SamplerError,
                     ToleranceNotMetError, ValidationError)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --- helpers --------------------------------------------------------------------------------

def _out(cfg: RunConfig, args) -> Path:
    return Path(args.out if args.out is not None else cfg.output_dir)


def _say(*parts):
    print(*parts, flush=True)


def _set_threads(n: Optional[int]):
    if n is None:
        return
    if n < 1:
        raise ValidationError("--threads must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _fluid_ansatz(cfg: RunConfig):
    from .functionals import AnsatzKind
    from .kinetic import reduced_psi

    a = cfg.ansatz()
    return a if a.kind is AnsatzKind.FLUID_PSI else reduced_psi(a)


def _energy_rows(model, cfg: RunConfig, baseline=None):
    from .functionals import default_reference, energy_report
    from .interpolation import qkernel

    ref = default_reference(model.density.total_mass, cfg.reference_radius)
    rep = energy_report(model.density, model.ansatz, ref, qkernel(model.interp),
                        baseline=None if baseline is None else baseline.density)
    return rep.rows()


def _write_model(path: Path, model, cfg: RunConfig, args):
    from .equilibrium import extend_model
    from .io import write_snapshot

    if cfg.grid_outer_radius > 0:
        model = extend_model(model, cfg.grid_outer_radius, cfg.solver_options())
    return write_snapshot(path, model, timestamp=not args.no_timestamp)


# --- commands -------------------------------------------------------------------------------

def cmd_mass_curve(cfg: RunConfig, args) -> int:
    from .equilibrium import mass_curve
    from .io import write_csv
    from .verify import scaling_coefficient

    if args.points < 2:
        raise ValidationError("--points must be >= 2")
    if not (args.s_min > 0 and args.s_max > args.s_min):
        raise ValidationError("need 0 < --s-min < --s-max")
    curve = mass_curve(_fluid_ansatz(cfg), cfg.interpolation(), args.s_min, args.s_max, args.points,
                       cfg.solver_options(), workers=args.threads or 1)
    out = _out(cfg, args)
    ts = not args.no_timestamp
    write_csv(out / "mass_curve.csv", ("s", "M_s", "R_s"),
              zip(curve.s_values, curve.masses, curve.radii), timestamp=ts)
    rows = []
    for regime, fit, nominal in (("deep", curve.fit_deep, 2.0), ("newtonian", curve.fit_newton, 1.0)):
        if fit is None:
            continue
        sel = (curve.s_values >= fit.s_min) & (curve.s_values <= fit.s_max)
        s, m = curve.s_values[sel], curve.masses[sel]
        rows.append((regime, fit.s_min, fit.s_max, fit.points, fit.exponent, fit.coefficient, nominal,
                     scaling_coefficient(s, m, nominal, "log"),
                     scaling_coefficient(s, m, nominal, "linear")))
    write_csv(out / "fits.csv", ("regime", "s_min", "s_max", "points", "exponent", "prefactor",
                                 "nominal_exponent", "coefficient", "coefficient_linear"), rows, timestamp=ts)
    _say(f"points={args.points} monotone={curve.monotone}")
    for r in rows:
        _say(f"{r[0]}: exponent={r[4]:.6g} coefficient={r[7]:.6g} (linear {r[8]:.6g})")
    _say(f"wrote {out / 'mass_curve.csv'} and {out / 'fits.csv'}")
    return EXIT_OK


def cmd_solve(cfg: RunConfig, args) -> int:
    from .equilibrium import shoot, solve_for_mass
    from .io import write_csv

    a = _fluid_ansatz(cfg)
    f = cfg.interpolation()
    opts = cfg.solver_options()
    if args.mass is not None:
        if not (args.mass > 0 and math.isfinite(args.mass)):
            raise ValidationError("--mass must be positive")
        model = solve_for_mass(a, f, args.mass, opts=opts, rtol=cfg.solver_mass_rtol)
    else:
        if not (args.central > 0 and math.isfinite(args.central)):
            raise ValidationError("--central must be positive")
        model = shoot(a, args.central, f, opts)
    out = _out(cfg, args)
    ts = not args.no_timestamp
    snap = _write_model(out / "model.snapshot", model, cfg, args)
    write_csv(out / "energies.csv", ("quantity", "value"), _energy_rows(model, cfg), timestamp=ts)
    _say(f"E0={model.cutoff_energy:.17g}")
    _say(f"R0={model.support_radius:.17g}")
    _say(f"M_s={model.total_mass:.17g}")
    _say(f"s={model.central_value:.17g}")
    _say(f"wrote {snap} and {out / 'energies.csv'}")
    return EXIT_OK


def _kinetic_ansatz(cfg: RunConfig):
    from .dynamics import phi_for_psi
    from .functionals import AnsatzFunction, AnsatzKind

    a = cfg.ansatz()
    if a.kind is AnsatzKind.KINETIC_PHI:
        return a
    if 1.5 < a.exponent < 3.0:
        return phi_for_psi(a)
    # fluid exponents outside (3/2, 3) have no kinetic counterpart
    demo = AnsatzFunction.kinetic(0.5, 1.0)
    print(f"note: fluid ansatz n={a.exponent:g} cannot be lifted; using kinetic k=0.5, c=1",
          file=sys.stderr)
    return demo


def cmd_lift(cfg: RunConfig, args) -> int:
    from .io import write_csv
    from .kinetic import lift_kinetic

    if not (args.mass > 0 and math.isfinite(args.mass)):
        raise ValidationError("--mass must be positive")
    phi = _kinetic_ansatz(cfg)
    from dataclasses import replace
    from .kinetic import LIFT_RESOLUTION

    res = args.resolution if args.resolution is not None else LIFT_RESOLUTION
    opts = replace(cfg.solver_options(), resolution=res)
    km = lift_kinetic(phi, cfg.interpolation(), args.mass, opts=opts)
    red = km.reduction
    hb, he = km.h_b(cfg.reference_radius), km.h_e(cfg.reference_radius)
    rows = [
        ("k", phi.exponent), ("n_exact", red.n_exact), ("n_fit", red.n_fit),
        ("c_exact", km.psi.coefficient), ("c_fit", red.c_fit),
        ("central_value", km.base.central_value), ("cutoff_energy", km.cutoff_energy),
        ("support_radius", km.support_radius), ("velocity_support", km.velocity_support),
        ("total_mass", km.base.total_mass), ("h_b", hb), ("h_e", he),
        ("h_rel_diff", abs(hb - he) / abs(he)), ("density_error", km.density_error()),
    ]
    out = _out(cfg, args)
    snap = _write_model(out / "model.snapshot", km.base, cfg, args)
    write_csv(out / "lift.csv", ("quantity", "value"), rows, timestamp=not args.no_timestamp)
    for k, v in rows:
        _say(f"{k}={v:.10g}")
    _say(f"wrote {snap} and {out / 'lift.csv'}")
    return EXIT_OK


def cmd_energies(cfg: RunConfig, args) -> int:
    from .io import read_snapshot, write_csv

    model = read_snapshot(args.snapshot)
    base = read_snapshot(args.baseline) if args.baseline else None
    rows = _energy_rows(model, cfg, base)
    out = _out(cfg, args)
    write_csv(out / "energies.csv", ("quantity", "value"), rows, timestamp=not args.no_timestamp)
    for k, v in rows:
        _say(f"{k}={v:.17g}")
    return EXIT_OK


def cmd_perturb(cfg: RunConfig, args) -> int:
    from .dynamics import run_perturbation
    from .io import read_snapshot, write_csv

    eps = args.eps
    if not (0.0 <= eps <= 0.2):
        raise ValidationError(f"--eps must lie in [0, 0.2], got {eps}")
    t_end = args.t_end if args.t_end is not None else cfg.dynamics_t_end_dyn
    if not (t_end > 0):
        raise ValidationError("--t-end must be positive")
    seed = args.seed if args.seed is not None else cfg.dynamics_seed
    n = args.shells if args.shells is not None else cfg.dynamics_n
    if n < 1:
        raise ValidationError("--shells must be >= 1")
    if args.snapshot:
        model = read_snapshot(args.snapshot)
    else:
        from .kinetic import lift_kinetic

        model = lift_kinetic(_kinetic_ansatz(cfg), cfg.interpolation(), args.mass)
    t0 = time.perf_counter()
    diag = run_perturbation(model, args.kind, eps, t_end=t_end, n=n, dt_frac=cfg.dynamics_dt_frac,
                            seed=seed, samples_per_tdyn=cfg.dynamics_samples_per_tdyn,
                            bins=cfg.dynamics_bins)
    elapsed = time.perf_counter() - t0
    out = _out(cfg, args)
    ts = not args.no_timestamp
    write_csv(out / "diagnostics.csv", ("t", "d_fluid", "grad_l2_dev", "grad_l32_dev", "energy", "virial"),
              diag.rows(), timestamp=ts)
    summary = [(f"max_{k}", v) for k, v in diag.maxima().items()]
    summary += [(f"growth_{k}", v) for k, v in diag.growth().items()]
    summary += [("initial_virial", diag.virial[0]), ("final_virial", diag.virial[-1])]
    write_csv(out / "summary.csv", ("quantity", "value"), summary, timestamp=ts)
    for k, v in summary:
        _say(f"{k}={v:.6g}")
    _say(f"runtime={elapsed:.1f}s")
    _say(f"wrote {out / 'diagnostics.csv'} and {out / 'summary.csv'}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    from .equilibrium import el_residual
    from .io import read_snapshot, write_csv
    from .verify import Check, run_suite

    seed = args.seed if args.seed is not None else cfg.dynamics_seed
    checks: List[Check] = []
    if args.snapshot:
        model = read_snapshot(args.snapshot)
        res = el_residual(model)
        checks.append(Check("snapshot_el_residual", res <= 1e-6, res, "<= 1e-06"))
    checks += run_suite(args.suite, seed)
    out = _out(cfg, args)
    rows = [c.row() for c in checks]
    write_csv(out / "verify.csv", ("check", "status", "value", "tolerance"), rows,
              timestamp=not args.no_timestamp)
    print("check,status,value,tolerance")
    for name, status, value, tol in rows:
        print(f"{name},{status},{value:.6g},{tol}")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------------

def _globals(p: argparse.ArgumentParser, sub: bool):
    # accepted before or after the command name; the sub-parser copy must not
    # overwrite a value given before the command
    d = argparse.SUPPRESS if sub else None
    p.add_argument("--config", metavar="PATH", default=d, help="key = value configuration file")
    p.add_argument("--out", metavar="DIR", default=d, help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, metavar="N", default=d, help="random seed")
    p.add_argument("--threads", type=int, metavar="N", default=d, help="worker threads/processes")
    p.add_argument("--no-timestamp", action="store_true", default=d if sub else False,
                   help="omit the generated-at line from outputs")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mondeq", description="Spherical MOND equilibria: solve, verify, perturb.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _globals(p, sub=False)
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        _globals(sp, sub=True)
        sp.set_defaults(func=func)
        return sp

    sp = add("mass-curve", cmd_mass_curve, "scan M_s and R_s over central densities")
    sp.add_argument("--s-min", type=float, default=1e-4)
    sp.add_argument("--s-max", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=60)

    sp = add("solve", cmd_solve, "solve one steady state and write a snapshot")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--mass", type=float, help="target total mass")
    g.add_argument("--central", type=float, help="central density s")

    sp = add("lift", cmd_lift, "lift to an isotropic distribution function and compare H_B with H_E")
    sp.add_argument("--mass", type=float, default=1.0)
    sp.add_argument("--resolution", type=int, default=None, help="grid resolution (default 4000)")

    sp = add("energies", cmd_energies, "energy report of a snapshot")
    sp.add_argument("--snapshot", required=True)
    sp.add_argument("--baseline", help="snapshot whose field is the reference for the gradient norms")

    sp = add("perturb", cmd_perturb, "perturb an equilibrium and evolve the shell ensemble")
    sp.add_argument("--snapshot", help="fluid snapshot with 3/2 < n < 3 (default: lift the config ansatz)")
    sp.add_argument("--mass", type=float, default=1.0, help="mass used when no snapshot is given")
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--kind", choices=("velocity_scale", "radial_breathing"), default="velocity_scale")
    sp.add_argument("--t-end", type=float, default=None, help="duration in dynamical times")
    sp.add_argument("--shells", type=int, default=None, help="number of shells (overrides dynamics.n)")

    sp = add("verify", cmd_verify, "run invariant suites")
    sp.add_argument("suite", nargs="?", default="all",
                    choices=("potential", "functionals", "equilibrium", "dynamics", "all"))
    sp.add_argument("--snapshot", help="also check this snapshot")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _set_threads(args.threads)
        overrides = {}
        if args.seed is not None:
            overrides["dynamics_seed"] = args.seed
        cfg = load_config(args.config, overrides)
        return args.func(cfg, args)
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.hints:
            tried = ", ".join(f"s={s:.3g}: M={m:.3g}" for s, m in sorted(exc.hints.items()))
            print(f"tried {tried}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # ValidationError and DomainError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ToleranceNotMetError, NoCompactSupportError, SamplerError, MondeqError,
            FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
