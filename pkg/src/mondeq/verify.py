"""Invariant suites behind ``mondeq verify``.

Each check yields a row ``check,status,value,tolerance``.  Checks run on
fixed canonical setups (Sqrt and Simple interpolation, Psi = rho^2/2, the
k = 1/2 kinetic model) so the table means the same thing on every machine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from .equilibrium import SolverOptions, el_residual, mass_curve, shoot, shoot_mass_radius, solve_for_mass
from .functionals import (AnsatzFunction, bump, casimir, default_reference, distance_fluid,
                          epot_newton, epot_q, epotq_directional_derivative, h_energy,
                          mass_neutral_bumps, taylor_remainder)
from .interpolation import (Family, InterpolationFunction, check_hoelder, check_q_taylor, q_eval,
                            qkernel)
from .radial import (RadialDensity, make_grid, potentials, qumond_direct, radial_rule,
                     uniform_ball)

__all__ = ["Check", "SUITES", "run_suite", "probe_densities", "random_perturbation",
           "scaling_coefficient"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: str

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def row(self):
        return (self.name, self.status, self.value, self.tolerance)


def _le(name, value, tol) -> Check:
    return Check(name, bool(value <= tol), float(value), f"<= {tol:g}")


def _ge(name, value, tol) -> Check:
    return Check(name, bool(value >= tol), float(value), f">= {tol:g}")


def _within(name, value, lo, hi) -> Check:
    return Check(name, bool(lo <= value <= hi), float(value), f"[{lo:g}, {hi:g}]")


# --- shared fixtures ------------------------------------------------------------------------

SQRT = InterpolationFunction(Family.SQRT, 1.0)
SIMPLE = InterpolationFunction(Family.SIMPLE, 1.0)
PSI = AnsatzFunction.fluid(1.0, 0.5)
PROBE_RADII = (0.3, 0.7, 1.0, 2.0, 5.0)


def probe_densities(resolution: int = 200) -> Dict[str, RadialDensity]:
    """Three compactly supported profiles on [0, 1]: flat, parabolic and a hollow shell."""
    grid = make_grid(1.0, resolution)
    parabolic = np.maximum(1.0 - grid**2, 0.0)
    shell = bump(grid, 0.6, 0.35)
    return {
        "uniform": uniform_ball(1.0, 1.0, resolution),
        "parabolic": RadialDensity(grid, parabolic),
        "shell": RadialDensity(grid, shell),
    }


def random_perturbation(eq, rng: np.random.Generator, max_fraction: float = 0.9) -> RadialDensity:
    """rho0 + phi for a random mass-neutral two-bump phi keeping rho >= 0.

    The positive bump may sit anywhere on the grid; the negative one stays
    inside the support and is capped so the density cannot go negative.
    """
    d = eq.density
    r0 = eq.support_radius
    grid = d.grid
    for _ in range(100):
        w1 = rng.uniform(0.05, 0.3) * r0
        w2 = rng.uniform(0.05, 0.3) * r0
        c1 = rng.uniform(w1, r0 - 1e-3 * r0)
        c2 = rng.uniform(w2, 0.9 * r0 - w2) if 0.9 * r0 - w2 > w2 else 0.5 * r0
        phi = mass_neutral_bumps(grid, c1, c2, w1, 1.0, width2=w2)
        neg = phi < 0
        if not np.any(neg):
            continue
        cap = float(np.min(d.rho[neg] / -phi[neg]))
        if not (cap > 0 and math.isfinite(cap)):
            continue
        amp = rng.uniform(1e-3, max_fraction) * cap
        return d.with_rho(np.maximum(d.rho + amp * phi, 0.0))
    raise RuntimeError("could not draw an admissible perturbation")


def scaling_coefficient(s, m, exponent: float, space: str = "log") -> float:
    """Least-squares c in m ~ c s^exponent, in log space (relative) or linear space."""
    s = np.asarray(s, dtype=float)
    m = np.asarray(m, dtype=float)
    if space == "log":
        return float(math.exp(np.mean(np.log(m) - exponent * np.log(s))))
    if space == "linear":
        x = s**exponent
        return float(np.dot(x, m) / np.dot(x, x))
    raise ValueError(f"unknown fit space {space!r}")


def _order(errors) -> float:
    e = np.asarray(errors, dtype=float)
    return float(np.mean(np.log2(e[:-1] / e[1:])))


# --- potential suite ------------------------------------------------------------------------

def _q_bounds(f: InterpolationFunction) -> List[Check]:
    q = qkernel(f)
    pts = np.logspace(-6, 4, 46)
    u, v = np.meshgrid(pts, pts, indexing="ij")
    keep = u >= v
    u, v = u[keep], v[keep]
    dq = q_eval(q, u) - q_eval(q, v)
    d15 = u**1.5 - v**1.5
    scale = np.maximum(np.abs(dq), 1e-300)
    upper = np.max((dq - 2.0 * f.lambda2 / 3.0 * d15) / scale)
    small = u <= f.threshold
    lower = np.max((2.0 * f.lambda1 / 3.0 * d15[small] - dq[small]) / scale[small])
    return [_le(f"q_upper_bound_{f.family.value}", upper, 1e-12),
            _le(f"q_lower_bound_{f.family.value}", lower, 1e-12)]


def _lambda_shape(f: InterpolationFunction) -> List[Check]:
    sig = np.logspace(-8, 8, 400)
    lam = f(sig)
    mono = float(np.max(np.diff(lam)))
    upper = float(np.max(lam * np.sqrt(sig) / math.sqrt(f.a0) - f.lambda2 / math.sqrt(f.a0)))
    sm = sig <= f.threshold
    lower = float(np.max(f.lambda1 - lam[sm] * np.sqrt(sig[sm])))
    return [_le(f"lambda_nonincreasing_{f.family.value}", mono, 0.0),
            _le(f"lambda_upper_bound_{f.family.value}", upper, 1e-14),
            _le(f"lambda_lower_bound_{f.family.value}", lower, 1e-14)]


def _hoelder(seed: int) -> List[Check]:
    out = []
    for f in (SQRT, SIMPLE):
        c1, c2 = check_hoelder(f, 10_000, seed), check_hoelder(f, 20_000, seed + 1)
        out.append(_le(f"hoelder_stability_{f.family.value}", abs(c2 - c1) / c1, 0.2))
        q = qkernel(f)
        t1, t2 = check_q_taylor(q, 10_000, seed), check_q_taylor(q, 20_000, seed + 1)
        out.append(_le(f"q_taylor_stability_{f.family.value}", abs(t2 - t1) / t1, 0.2))
    return out


def _q_quadrature() -> Check:
    q = qkernel(SQRT)
    v = np.logspace(-4, 4, 100)
    rel = np.abs(q.quadrature(v) - q(v)) / q(v)
    return _le("q_closed_vs_quadrature_sqrt", float(np.max(rel)), q.quadrature_tol)


def _shell_theorem() -> List[Check]:
    d = uniform_ball(1.0, 1.0, 200, outer_radius=3.0)
    r = np.linspace(0.05, 3.0, 60)
    exact = np.where(r <= 1.0, r, 1.0 / r**2)
    err = float(np.max(np.abs(d.gn_at(r) - exact)))
    fp = potentials(d, SQRT)
    ext = fp.um_at(math.e) - fp.um_at(1.0)
    return [_le("shell_theorem_uniform", err, 1e-10),
            _le("exterior_potential_closed_form", abs(ext - (2.0 - 1.0 / math.e)), 1e-10)]


def _field_bounds() -> List[Check]:
    worst_lo = worst_hi = -math.inf
    for d in probe_densities().values():
        R, M = d.support_radius, d.total_mass
        r = np.geomspace(1.01 * R, 100.0 * R, 50)
        g = d.gn_at(r)
        lo = np.sqrt(1.0 - R**2 / r**2) * M / (r + R) ** 2
        hi = M / (r - R) ** 2
        worst_lo = max(worst_lo, float(np.max((lo - g) / g)))
        worst_hi = max(worst_hi, float(np.max((g - hi) / g)))
    return [_le("field_bound_lower", worst_lo, 0.0), _le("field_bound_upper", worst_hi, 0.0)]


def _log_growth() -> Check:
    worst = -math.inf
    for f in (SQRT, SIMPLE):
        for d in probe_densities().values():
            fp = potentials(d, f)
            R, M = d.support_radius, d.total_mass
            r = np.geomspace(2 * R, 1e3 * R, 40)
            bound = fp.um_at(2 * R) + f.lambda1 * math.sqrt(M / 2.0) * np.log(r / (2 * R))
            worst = max(worst, float(np.max(bound - fp.um_at(r))))
    return _le("potential_log_growth", worst, 1e-12)


def _qumond() -> List[Check]:
    out = []
    for name, d in probe_densities().items():
        fp = potentials(d, SQRT)
        direct = qumond_direct(d, SQRT, PROBE_RADII)
        radial = fp.ulam_at(np.array(PROBE_RADII))
        rel = float(np.max(np.abs(direct - radial) / np.abs(radial)))
        out.append(_le(f"qumond_direct_vs_radial_{name}", rel, 1e-3))
    return out


def _refinement() -> Check:
    r = np.array([0.25, 0.5, 0.75, 1.0])
    vals = []
    for res in (100, 200, 400, 800):
        g = make_grid(1.0, res)
        d = RadialDensity(g, np.maximum(1.0 - g**2, 0.0))
        d = d.with_rho(d.rho / d.total_mass)
        vals.append(potentials(d, SQRT).um_at(r))
    errs = [float(np.max(np.abs(vals[i] - vals[i + 1]))) for i in range(3)]
    return _within("potential_grid_order", _order(errs), 1.8, 2.2)


def potential_suite(seed: int = 0) -> List[Check]:
    out: List[Check] = []
    for f in (SQRT, SIMPLE):
        out += _lambda_shape(f)
        out += _q_bounds(f)
    out.append(_q_quadrature())
    out += _hoelder(seed)
    out += _shell_theorem()
    out += _field_bounds()
    out.append(_log_growth())
    out.append(_refinement())
    out += _qumond()
    return out


# --- functionals suite ----------------------------------------------------------------------

def _equilibrium(s: float = 1.0, resolution: int = 2000):
    return shoot(PSI, s, SQRT, SolverOptions(resolution=resolution))


def functionals_suite(seed: int = 0) -> List[Check]:
    out: List[Check] = []
    ball = uniform_ball(1.0)
    out.append(_le("uniform_ball_epot_newton", abs(epot_newton(ball) + 0.6), 1e-10))
    out.append(_le("uniform_ball_casimir", abs(casimir(ball, PSI) - 3.0 / (8.0 * math.pi)), 1e-12))
    q = qkernel(SQRT)
    ref = default_reference(1.0)
    out.append(_le("epot_q_self", abs(epot_q(ball, ref, q)), 1e-14))

    # first inequality of the energy-estimate chain on random mass-matched densities
    rng = np.random.default_rng(seed)
    worst = -math.inf
    grid = make_grid(1.5, 300)
    for _ in range(20):
        rho = bump(grid, rng.uniform(0.3, 1.0), rng.uniform(0.2, 0.5)) + rng.uniform(0, 1) * bump(
            grid, 0.0, rng.uniform(0.3, 1.4))
        d = RadialDensity(grid, rho)
        d = d.with_rho(rho / d.total_mass)
        s, w = radial_rule(ref.profile.grid)
        rhs = float(np.sum(w * s * s * q_eval(q, d.gn_at(s))))
        worst = max(worst, -epot_q(d, ref, q) - rhs)
    out.append(_le("energy_chain_first_inequality", worst, 1e-12))

    g = ball.grid
    phi = mass_neutral_bumps(g, 0.3, 0.75, 0.2)
    chk = epotq_directional_derivative(ball, phi, ref, q)
    out.append(_ge("epotq_derivative_order", chk.order, 0.9))

    eq = _equilibrium()
    floor = 1e-12 * (abs(h_energy(eq.density, PSI, default_reference(eq.density.total_mass), q)) + 1.0)
    out.append(_le("distance_at_equilibrium", abs(distance_fluid(eq.density, eq)), floor))
    dmin = math.inf
    hmin = math.inf
    h0 = h_energy(eq.density, PSI, default_reference(eq.density.total_mass), q)
    for _ in range(30):
        d = random_perturbation(eq, rng)
        dmin = min(dmin, distance_fluid(d, eq))
        hmin = min(hmin, h_energy(d, PSI, default_reference(eq.density.total_mass), q) - h0)
    out.append(_ge("distance_positive_min", dmin, floor))
    out.append(_ge("minimizer_energy_gap_min", hmin, -floor))

    phi = mass_neutral_bumps(eq.density.grid, 0.3 * eq.support_radius, 0.7 * eq.support_radius,
                             0.2 * eq.support_radius, 0.5 * eq.central_value)
    taus = np.logspace(-1, -4, 4)
    rems, ident = [], 0.0
    for t in taus:
        tr = taylor_remainder(eq.density.with_rho(eq.density.rho + t * phi), eq)
        rems.append(abs(tr.remainder))
        ident = max(ident, abs(tr.newton_part - tr.newton_identity) / abs(tr.newton_identity))
    slope = float(np.polyfit(np.log(taus), np.log(rems), 1)[0])
    out.append(_ge("taylor_remainder_exponent", slope, 1.5))
    out.append(_le("taylor_newton_identity", ident, 1e-8))
    return out


# --- equilibrium suite ----------------------------------------------------------------------

def equilibrium_suite(seed: int = 0) -> List[Check]:
    from .kinetic import lift_kinetic

    out: List[Check] = []
    model = shoot(PSI, 1e-3, SQRT)
    out.append(_le("el_residual_default", el_residual(model), 1e-6))
    res = [el_residual(shoot(PSI, 1e-3, SQRT, SolverOptions(resolution=n))) for n in (500, 1000, 2000)]
    out.append(_within("el_residual_order", _order(res), 1.8, 2.2))

    deep = mass_curve(PSI, SQRT, 1e-4, 1e-2, 12)
    out.append(_within("deep_slope", deep.fit_deep.exponent, 1.98, 2.02))
    out.append(_within("deep_coefficient", scaling_coefficient(deep.s_values, deep.masses, 2.0), 1.00, 1.12))
    m, _ = shoot_mass_radius(PSI, 1e4, SQRT)
    target = math.sqrt(math.pi) / 2.0
    out.append(_le("newton_mass_ratio_1e4", abs(m / 1e4 - target) / target, 0.05))
    scan = mass_curve(PSI, SQRT, 1e-4, 1e3, 60)
    out.append(Check("mass_curve_monotone", scan.monotone, float(np.min(np.diff(scan.masses))), "> 0"))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for target_m in 10 ** rng.uniform(-6, 2, 3):
        mod = solve_for_mass(PSI, SQRT, float(target_m))
        worst = max(worst, abs(mod.total_mass - target_m) / target_m)
    out.append(_le("solve_for_mass_roundtrip", worst, 1e-6))

    km = lift_kinetic(AnsatzFunction.kinetic(0.5, 1.0), SQRT, 1.0)
    red = km.reduction
    out.append(_le("reduction_exponent", abs(red.n_fit - red.n_exact), 1e-3))
    hb, he = km.h_b(), km.h_e()
    out.append(_le("lift_hb_equals_he", abs(hb - he) / abs(he), 1e-6))
    out.append(_le("lift_density_reproduction", km.density_error(), 1e-6))
    return out


# --- dynamics suite -------------------------------------------------------------------------

def dynamics_suite(seed: int = 0) -> List[Check]:
    from . import dynamics as dyn
    from .kinetic import lift_kinetic

    out: List[Check] = []
    # a light shell on a circular orbit about a unit point mass
    e = dyn.ShellEnsemble(np.array([1.0]), np.array([0.0]), np.array([math.sqrt(2.0)]),
                          np.array([1e-12]), central_mass=1.0)
    period = 2.0 * math.pi / math.sqrt(2.0)
    e1 = dyn.evolve(e, SQRT, period / 4000, 4000)
    out.append(_le("circular_orbit_radius", abs(float(e1.r[0]) - 1.0), 1e-6))

    km = lift_kinetic(AnsatzFunction.kinetic(0.5, 1.0), SQRT, 1.0)
    ens = dyn.sample_from_equilibrium(km, 20_000, seed)
    out.append(_le("sampled_virial", abs(dyn.virial_ratio(ens, SQRT) - 1.0), 0.02))
    tdyn = dyn.dynamical_time(km.base)
    dt = tdyn / 2000
    fwd = dyn.evolve(ens, SQRT, dt, 200)
    back = dyn.ShellEnsemble(fwd.r, -fwd.v_r, fwd.L, fwd.w, ids=fwd.ids, r_floor=fwd.r_floor)
    ret = dyn.evolve(back, SQRT, dt, 200)
    order = np.argsort(ret.ids)
    base_order = np.argsort(ens.ids)
    out.append(_le("time_reversibility", float(np.max(np.abs(ret.r[order] - ens.r[base_order]))), 1e-9))
    e0 = dyn.energy_components(ens, SQRT)
    scale = e0["kinetic"] + abs(e0["epot_newton"]) + abs(e0["epot_q"])
    e_end = dyn.energy_components(dyn.evolve(ens, SQRT, dt, 2000), SQRT)
    out.append(_le("energy_drift_one_tdyn", abs(e_end["total"] - e0["total"]) / scale, 1e-3))
    grid = np.linspace(0.0, 1.25 * km.support_radius, 65)
    dep = dyn.deposit(ens, grid)
    out.append(_le("deposit_mass", abs(dep.total_mass - ens.total_mass) / ens.total_mass, 1e-12))
    return out


SUITES: Dict[str, Callable[[int], List[Check]]] = {
    "potential": potential_suite,
    "functionals": functionals_suite,
    "equilibrium": equilibrium_suite,
    "dynamics": dynamics_suite,
}


def run_suite(name: str, seed: int = 0) -> List[Check]:
    names = list(SUITES) if name == "all" else [name]
    out: List[Check] = []
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {n!r}")
        out += SUITES[n](seed)
    return out
