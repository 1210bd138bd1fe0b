"""Steady states by shooting from the central density.

On the support the Euler-Lagrange identity reads Psi'(rho) = E0 - U^M(r).
Writing eta = E0 - U^M (the enthalpy) gives the first-order system

    d eta / dr = -gM(r) = -(1 + lam(M/r^2)) M/r^2,     dM/dr = 4 pi r^2 (Psi')^{-1}(eta),

started at eta(0) = Psi'(s), M(0) = 0 and stopped where eta reaches 0.  It is
integrated in x = sqrt(r), which removes the sqrt(r) behaviour of the Mondian
term at the centre.  E0 never enters the integration; it is recovered
afterwards from the potential of the solved density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import BracketError, DomainError, NoCompactSupportError, ValidationError
from .functionals import AnsatzFunction, AnsatzKind
from .interpolation import InterpolationFunction
from .quadrature import gauss_legendre
from .radial import (FieldProfile, PotentialNormalization, RadialDensity, make_grid,
                     potentials)

__all__ = [
    "SolverOptions",
    "EquilibriumModel",
    "MassCurve",
    "PowerFit",
    "shoot",
    "shoot_mass_radius",
    "mass_curve",
    "solve_for_mass",
    "el_residual",
    "extend_model",
    "fit_power",
    "DEEP_THRESHOLD",
    "NEWTON_THRESHOLD",
]

DEEP_THRESHOLD = 1e-2
NEWTON_THRESHOLD = 1e2
FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class SolverOptions:
    rtol: float = 1e-12
    atol_fraction: float = 1e-14
    start_fraction: float = 1e-6
    resolution: int = 2000
    max_extensions: int = 40
    normalization: PotentialNormalization = PotentialNormalization.NEWTONIAN_AT_INFINITY

    def __post_init__(self):
        if not (0 < self.rtol < 1e-3):
            raise ValidationError("solver rtol must lie in (0, 1e-3)")
        if not (self.atol_fraction > 0) or not (0 < self.start_fraction < 1e-2):
            raise ValidationError("solver tolerances must be positive")
        if self.resolution < 10:
            raise ValidationError("grid resolution must be >= 10")
        object.__setattr__(self, "normalization", PotentialNormalization(self.normalization))


@dataclass(frozen=True, eq=False)
class EquilibriumModel:
    density: RadialDensity
    fields: FieldProfile
    ansatz: AnsatzFunction
    central_value: float
    cutoff_energy: float
    support_radius: float
    total_mass: float
    interp: InterpolationFunction = field(repr=False)

    def el_residual(self, trim: float = 1e-3) -> float:
        return el_residual(self, trim)


def extend_model(model: EquilibriumModel, outer_radius: float,
                 opts: Optional[SolverOptions] = None) -> EquilibriumModel:
    """The same steady state on a grid continued with vacuum out to ``outer_radius``."""
    if outer_radius <= model.density.grid[-1]:
        return model
    opts = opts or SolverOptions()
    g = model.density.grid
    h = g[-1] - g[-2]
    count = max(1, int(math.ceil((outer_radius - g[-1]) / h)))
    extra = np.linspace(g[-1], outer_radius, count + 1)[1:]
    density = RadialDensity(np.concatenate([g, extra]),
                            np.concatenate([model.density.rho, np.zeros(extra.size)]))
    fields = potentials(density, model.interp, opts.normalization)
    return EquilibriumModel(density=density, fields=fields, ansatz=model.ansatz,
                            central_value=model.central_value,
                            cutoff_energy=float(fields.um_at(model.support_radius)),
                            support_radius=model.support_radius, total_mass=model.total_mass,
                            interp=model.interp)


def _check_ansatz(a: AnsatzFunction):
    if a.kind is not AnsatzKind.FLUID_PSI:
        raise DomainError("shooting needs a fluid ansatz Psi")


def _center_series(a: AnsatzFunction, f: InterpolationFunction, s: float, r1) -> Tuple[np.ndarray, np.ndarray]:
    """(eta, M) near the centre from the uniform-core expansion M = (4 pi/3) s r^3."""
    r1 = np.atleast_1d(np.asarray(r1, dtype=float))
    k = FOUR_PI / 3.0 * s
    m = k * r1**3
    # int_0^r lam(k t) k t dt with t = r u^2 (sqrt endpoint behaviour)
    x, w = gauss_legendre(16)
    t = r1[:, None] * x * x
    wt = r1[:, None] * 2.0 * x * w
    mond = np.sum(wt * f.field_term(k * t), axis=1)
    eta = a.derivative(s) - 0.5 * k * r1**2 - mond
    return eta, m


def _scale(a: AnsatzFunction, f: InterpolationFunction, s: float) -> float:
    eta_c = a.derivative(s)
    newton = math.sqrt(3.0 * eta_c / (2.0 * math.pi * s))
    deep = (3.0 * eta_c / (2.0 * math.sqrt(FOUR_PI * f.a0 * s / 3.0))) ** (2.0 / 3.0)
    return min(newton, deep)


def _integrate(a: AnsatzFunction, f: InterpolationFunction, s: float, opts: SolverOptions,
               dense: bool):
    if not (s > 0 and math.isfinite(s)):
        raise DomainError(f"central density must be positive, got {s}")
    _check_ansatz(a)
    scale = _scale(a, f, s)
    r1 = opts.start_fraction * scale
    eta1, m1 = _center_series(a, f, s, r1)
    eta_c = a.derivative(s)
    m_scale = FOUR_PI / 3.0 * s * scale**3
    atol = [opts.atol_fraction * eta_c, opts.atol_fraction * m_scale]

    def rhs(x, y):
        eta, m = y
        r = x * x
        g = m / (r * r) if m > 0 else 0.0
        gm = g + float(f.field_term(g))
        rho = float(a.inverse_derivative(eta))
        return [-2.0 * x * gm, 2.0 * FOUR_PI * x**5 * rho]

    def surface(x, y):
        return y[0]

    surface.terminal = True
    surface.direction = -1

    x0 = math.sqrt(r1)
    y0 = [float(eta1[0]), float(m1[0])]
    x_end = math.sqrt(8.0 * scale)
    for _ in range(opts.max_extensions):
        sol = solve_ivp(rhs, (x0, x_end), y0, method="DOP853", rtol=opts.rtol, atol=atol,
                        events=surface, dense_output=dense)
        if sol.status == -1:
            raise NoCompactSupportError(f"integration failed at s={s}: {sol.message}")
        if sol.t_events[0].size:
            xs = float(sol.t_events[0][0])
            ms = float(sol.y_events[0][0][1])
            return xs * xs, ms, sol, r1
        # continue from where we stopped with a larger horizon
        x0 = float(sol.t[-1])
        y0 = [float(sol.y[0, -1]), float(sol.y[1, -1])]
        x_end *= 2.0
        if dense:
            # restart cleanly so a single dense solution covers [sqrt(r1), x_s]
            x0, y0 = math.sqrt(r1), [float(eta1[0]), float(m1[0])]
    raise NoCompactSupportError(f"density did not reach zero before r={x_end**2:.3g} (s={s})")


def shoot_mass_radius(a: AnsatzFunction, s: float, f: InterpolationFunction,
                      opts: Optional[SolverOptions] = None) -> Tuple[float, float]:
    """(M_s, R_s) without building the full model."""
    opts = opts or SolverOptions()
    r_s, m_s, _, _ = _integrate(a, f, s, opts, dense=False)
    return m_s, r_s


def shoot(a: AnsatzFunction, s: float, f: InterpolationFunction,
          opts: Optional[SolverOptions] = None) -> EquilibriumModel:
    opts = opts or SolverOptions()
    r_s, m_s, sol, r1 = _integrate(a, f, s, opts, dense=True)
    grid = make_grid(r_s, opts.resolution)
    eta = np.empty_like(grid)
    inner = grid < r1
    eta[inner] = _center_series(a, f, s, grid[inner])[0]
    outer = ~inner
    eta[outer] = sol.sol(np.sqrt(grid[outer]))[0]
    eta[0] = a.derivative(s)
    rho = a.inverse_derivative(eta)
    rho[-1] = 0.0
    density = RadialDensity(grid, rho)
    fields = potentials(density, f, opts.normalization)
    e0 = fields.um_at(r_s)
    return EquilibriumModel(density=density, fields=fields, ansatz=a, central_value=float(s),
                            cutoff_energy=float(e0), support_radius=float(r_s),
                            total_mass=float(m_s), interp=f)


def el_residual(model: EquilibriumModel, trim: float = 1e-3) -> float:
    """max |Psi'(rho) + U^M - E0| over nodes with r <= R (1 - trim), divided by Psi'(s).

    Psi'(s) = E0 - U^M(0) is the depth of the potential well, i.e. |E0| in
    the centre-zero normalisation, and does not depend on the offset.
    """
    d = model.density
    r = d.grid
    mask = r <= model.support_radius * (1.0 - trim)
    res = model.ansatz.derivative(d.rho[mask]) + model.fields.UM[mask] - model.cutoff_energy
    return float(np.max(np.abs(res)) / model.ansatz.derivative(model.central_value))


# --- mass curves ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerFit:
    coefficient: float
    exponent: float
    s_min: float
    s_max: float
    points: int


def fit_power(s: np.ndarray, m: np.ndarray) -> Optional[PowerFit]:
    if s.size < 2:
        return None
    slope, icpt = np.polyfit(np.log(s), np.log(m), 1)
    return PowerFit(float(math.exp(icpt)), float(slope), float(s.min()), float(s.max()), int(s.size))


@dataclass(frozen=True)
class MassCurve:
    s_values: np.ndarray
    masses: np.ndarray
    radii: np.ndarray
    fit_deep: Optional[PowerFit]
    fit_newton: Optional[PowerFit]

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.masses) > 0))


def _shoot_job(job):
    a, s, f, opts = job
    try:
        return shoot_mass_radius(a, s, f, opts)
    except (NoCompactSupportError, DomainError) as exc:
        raise type(exc)(f"shooting failed at s={s!r}: {exc}") from exc


def mass_curve(a: AnsatzFunction, f: InterpolationFunction, s_min: float, s_max: float,
               points: int, opts: Optional[SolverOptions] = None,
               deep_threshold: float = DEEP_THRESHOLD,
               newton_threshold: float = NEWTON_THRESHOLD, workers: int = 1) -> MassCurve:
    """Shoot at ``points`` log-spaced central values; ``workers > 1`` uses processes.

    Results are collected in s order, so they do not depend on ``workers``.
    """
    if not (0 < s_min < s_max):
        raise DomainError("need 0 < s_min < s_max")
    if points < 2:
        raise DomainError("need at least 2 points")
    s_vals = np.logspace(math.log10(s_min), math.log10(s_max), points)
    jobs = [(a, float(s), f, opts) for s in s_vals]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_shoot_job, jobs))
    else:
        results = [_shoot_job(j) for j in jobs]
    ms = np.array([r[0] for r in results])
    rs = np.array([r[1] for r in results])
    deep = s_vals <= deep_threshold * (1 + 1e-12)
    newt = s_vals >= newton_threshold * (1 - 1e-12)
    return MassCurve(s_vals, ms, rs, fit_power(s_vals[deep], ms[deep]),
                     fit_power(s_vals[newt], ms[newt]))


def solve_for_mass(a: AnsatzFunction, f: InterpolationFunction, target_mass: float,
                   bracket: Optional[Sequence[float]] = None, opts: Optional[SolverOptions] = None,
                   rtol: float = 1e-10) -> EquilibriumModel:
    """Central density whose equilibrium has mass ``target_mass`` (root of log M_s - log M)."""
    if not (target_mass > 0 and math.isfinite(target_mass)):
        raise DomainError("target mass must be positive")
    opts = opts or SolverOptions()
    log_target = math.log(target_mass)

    def g(logs):
        return math.log(shoot_mass_radius(a, math.exp(logs), f, opts)[0]) - log_target

    tried = {}
    if bracket is not None:
        lo, hi = (math.log(float(b)) for b in bracket)
        glo, ghi = g(lo), g(hi)
        tried = {math.exp(lo): glo, math.exp(hi): ghi}
        if glo * ghi > 0:
            raise BracketError("bracket does not straddle the target mass",
                               hints={k: math.exp(v + log_target) for k, v in tried.items()})
    else:
        # M_s increases with s, so walk a decade at a time away from s = 1
        lo = hi = 0.0
        glo = ghi = g(0.0)
        tried[1.0] = glo
        step = math.log(10.0)
        for _ in range(40):
            if glo <= 0 <= ghi:
                break
            if glo > 0:
                hi, ghi = lo, glo
                lo -= step
                glo = g(lo)
                tried[math.exp(lo)] = glo
            else:
                lo, glo = hi, ghi
                hi += step
                ghi = g(hi)
                tried[math.exp(hi)] = ghi
        else:
            raise BracketError("could not bracket the target mass",
                               hints={k: math.exp(v + log_target) for k, v in tried.items()})
    if glo == 0:
        root = lo
    elif ghi == 0:
        root = hi
    else:
        root = brentq(g, lo, hi, xtol=1e-14, rtol=rtol)
    return shoot(a, math.exp(root), f, opts)
