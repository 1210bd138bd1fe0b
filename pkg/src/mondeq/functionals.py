"""Energy functionals, distances and derivative checks for radial densities.

Every volume integral is reduced to a radial one, int dx -> 4 pi int r^2 dr,
and evaluated on the union of the grids involved with the same Gauss rule,
so differences of functionals see identical nodes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .interpolation import QKernel, q_eval, qkernel
from .radial import FOUR_PI, RadialDensity, ReferenceDensity, potentials, radial_rule, uniform_ball

__all__ = [
    "AnsatzKind",
    "AnsatzFunction",
    "EnergyReport",
    "DerivativeCheck",
    "TaylorRemainder",
    "epot_newton",
    "epot_q",
    "casimir",
    "h_energy",
    "energy_report",
    "distance_fluid",
    "distance_kinetic",
    "epotq_directional_derivative",
    "taylor_remainder",
    "default_reference",
    "bump",
    "mass_neutral_bumps",
    "MASS_RTOL",
]

# relative tolerance for "same mass"
MASS_RTOL = 1e-12


class AnsatzKind(str, enum.Enum):
    FLUID_PSI = "fluid"
    KINETIC_PHI = "kinetic"


@dataclass(frozen=True)
class AnsatzFunction:
    """Polytropic Casimir integrand c * x^(1 + 1/exponent)."""

    kind: AnsatzKind = AnsatzKind.FLUID_PSI
    exponent: float = 1.0
    coefficient: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", AnsatzKind(self.kind))
        if not (self.coefficient > 0 and math.isfinite(self.coefficient)):
            raise DomainError("ansatz coefficient must be positive")
        hi = 3.0 if self.kind is AnsatzKind.FLUID_PSI else 1.5
        if not (0.0 < self.exponent < hi):
            raise DomainError(f"{self.kind.value} exponent must lie in (0, {hi}), got {self.exponent}")

    @classmethod
    def fluid(cls, n: float = 1.0, c: float = 0.5) -> "AnsatzFunction":
        return cls(AnsatzKind.FLUID_PSI, n, c)

    @classmethod
    def kinetic(cls, k: float = 0.5, c: float = 1.0) -> "AnsatzFunction":
        return cls(AnsatzKind.KINETIC_PHI, k, c)

    @property
    def power(self) -> float:
        return 1.0 + 1.0 / self.exponent

    def value(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        out = self.coefficient * x**self.power
        return out if out.ndim else float(out)

    def derivative(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        out = self.coefficient * self.power * x ** (1.0 / self.exponent)
        return out if out.ndim else float(out)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.coefficient * self.power / self.exponent * x ** (1.0 / self.exponent - 1.0)
        return out if out.ndim else float(out)

    def inverse_derivative(self, y):
        """(Psi')^{-1} extended by 0 for y <= 0."""
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        out = (y / (self.coefficient * self.power)) ** self.exponent
        return out if out.ndim else float(out)

    def describe(self) -> str:
        return f"{self.kind.value}:{self.exponent!r}:{self.coefficient!r}"

    @classmethod
    def parse(cls, text: str) -> "AnsatzFunction":
        try:
            kind, n, c = text.split(":")
            return cls(AnsatzKind(kind), float(n), float(c))
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"bad ansatz description {text!r}") from exc


# --- quadrature plumbing -----------------------------------------------------------

def _union_rule(*densities: RadialDensity):
    grid = densities[0].grid
    for d in densities[1:]:
        grid = np.union1d(grid, d.grid)
    return radial_rule(grid)


def _check_mass(m1: float, m2: float, what: str, rtol: float = MASS_RTOL):
    if abs(m1 - m2) > rtol * max(abs(m1), abs(m2), 1e-300):
        raise ValidationError(f"{what}: masses differ ({m1!r} vs {m2!r})")


def default_reference(mass: float, radius: float = 1.0) -> ReferenceDensity:
    return ReferenceDensity(uniform_ball(mass, radius))


# --- functionals -------------------------------------------------------------------------

def epot_newton(d: RadialDensity) -> float:
    """-(1/8 pi) int |grad U^N|^2 dx = -1/2 int_0^inf M^2 / r^2 dr."""
    s, w = radial_rule(d.grid)
    m = d.mass_at(s)
    interior = np.sum(w * m * m / (s * s))
    return float(-0.5 * interior - d.total_mass**2 / (2.0 * d.outer_radius))


def epot_q(d: RadialDensity, ref: ReferenceDensity, q: QKernel) -> float:
    """-(1/4 pi) int [Q(|grad U^N_rho|) - Q(|grad U^N_ref|)] dx."""
    _check_mass(d.total_mass, ref.total_mass, "epot_q")
    s, w = _union_rule(d, ref.profile)
    diff = q_eval(q, d.gn_at(s)) - q_eval(q, ref.profile.gn_at(s))
    return float(-np.sum(w * s * s * diff))


def casimir(d: RadialDensity, a: AnsatzFunction) -> float:
    if a.kind is not AnsatzKind.FLUID_PSI:
        raise DomainError("casimir expects a fluid ansatz")
    s, w = radial_rule(d.grid)
    return float(FOUR_PI * np.sum(w * s * s * a.value(d.rho_at(s))))


def h_energy(d: RadialDensity, a: AnsatzFunction, ref: ReferenceDensity, q: QKernel) -> float:
    return epot_newton(d) + epot_q(d, ref, q) + casimir(d, a)


def _grad_dev(d: RadialDensity, base: RadialDensity, p: float) -> float:
    """(int |gN - gN_base|^p dx)^{1/p}, including the exterior tail if masses differ."""
    s, w = _union_rule(d, base)
    dg = np.abs(d.gn_at(s) - base.gn_at(s))
    val = FOUR_PI * np.sum(w * s * s * dg**p)
    dm = abs(d.total_mass - base.total_mass)
    # rounding-level mismatches carry no tail
    if dm > 1e-12 * max(d.total_mass, base.total_mass):
        if 2 * p <= 3:
            return math.inf
        big = max(d.outer_radius, base.outer_radius)
        val += FOUR_PI * dm**p * big ** (3 - 2 * p) / (2 * p - 3)
    return float(val ** (1.0 / p))


@dataclass(frozen=True)
class EnergyReport:
    epot_newton: float
    epot_q: float
    casimir: float
    ekin: float
    h_value: float
    norm_l1: float
    norm_l65: float
    norm_lpsi: float
    grad_l2_dev: float
    grad_l32_dev: float

    def rows(self):
        return [
            ("epot_newton", self.epot_newton),
            ("epot_q", self.epot_q),
            ("casimir", self.casimir),
            ("ekin", self.ekin),
            ("h_value", self.h_value),
            ("norm_l1", self.norm_l1),
            ("norm_l65", self.norm_l65),
            ("norm_lpsi", self.norm_lpsi),
            ("grad_l2_dev", self.grad_l2_dev),
            ("grad_l32_dev", self.grad_l32_dev),
        ]


def energy_report(d: RadialDensity, a: AnsatzFunction, ref: ReferenceDensity, q: QKernel,
                  baseline: Optional[RadialDensity] = None, ekin: float = 0.0) -> EnergyReport:
    en = epot_newton(d)
    eq_ = epot_q(d, ref, q)
    c = casimir(d, a)
    base = baseline if baseline is not None else d
    return EnergyReport(
        epot_newton=en, epot_q=eq_, casimir=c, ekin=ekin, h_value=en + eq_ + ekin + c,
        norm_l1=d.total_mass, norm_l65=d.lp_norm(1.2), norm_lpsi=d.lp_norm(a.power),
        grad_l2_dev=_grad_dev(d, base, 2.0), grad_l32_dev=_grad_dev(d, base, 1.5),
    )


def distance_fluid(d: RadialDensity, eq, mass_rtol: float = 1e-9) -> float:
    """int [Psi(rho) - Psi(rho0) + (U^M_0 - E0)(rho - rho0)] dx.

    ``eq`` is an equilibrium model (density, fields, ansatz, cutoff_energy).
    E0 drops out for equal masses; subtracting it keeps the integrand
    pointwise nonnegative up to the Euler-Lagrange residual.
    """
    base: RadialDensity = eq.density
    _check_mass(d.total_mass, base.total_mass, "distance_fluid", mass_rtol)
    s, w = _union_rule(d, base)
    rho = d.rho_at(s)
    rho0 = base.rho_at(s)
    a = eq.ansatz
    pot = eq.fields.um_at(s) - eq.cutoff_energy
    integrand = a.value(rho) - a.value(rho0) + pot * (rho - rho0)
    return float(FOUR_PI * np.sum(w * s * s * integrand))


def distance_kinetic(fm, eq_f0) -> float:
    """Phase-space distance; see :func:`mondeq.kinetic.kinetic_distance`."""
    from .kinetic import kinetic_distance

    return kinetic_distance(fm, eq_f0)


# --- perturbations -------------------------------------------------------------------

def bump(r, center: float, width: float):
    """Smooth compactly supported bump (1 - x^2)^3 on |r - center| < width."""
    x = (np.asarray(r, dtype=float) - center) / width
    return np.where(np.abs(x) < 1.0, (1.0 - x * x) ** 3, 0.0)


def mass_neutral_bumps(grid, c1: float, c2: float, width: float, amplitude: float = 1.0,
                       width2: Optional[float] = None) -> np.ndarray:
    """Node values of amplitude * [bump(c1) - gamma * bump(c2)] with zero total mass.

    gamma is set from the piecewise-linear masses so the integral vanishes
    exactly on ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    b1 = bump(grid, c1, width)
    b2 = bump(grid, c2, width if width2 is None else width2)
    m1 = RadialDensity(grid, b1).total_mass
    m2 = RadialDensity(grid, b2).total_mass
    if m1 <= 0 or m2 <= 0:
        raise DomainError("bumps are not resolved by the grid")
    return amplitude * (b1 - (m1 / m2) * b2)


def _signed_mass(grid, phi) -> float:
    pos = RadialDensity(grid, np.maximum(phi, 0.0)).total_mass
    neg = RadialDensity(grid, np.maximum(-phi, 0.0)).total_mass
    return pos - neg, pos + neg


@dataclass(frozen=True)
class DerivativeCheck:
    taus: np.ndarray
    slopes: np.ndarray
    limit: float
    errors: np.ndarray
    order: float


def epotq_directional_derivative(d: RadialDensity, phi, ref: ReferenceDensity, q: QKernel,
                                 taus: Sequence[float] = (1e-2, 1e-3, 1e-4)) -> DerivativeCheck:
    """Finite-difference slopes of E_pot^Q along ``phi`` against int U^lam phi dx.

    ``phi`` holds node values on ``d.grid`` (piecewise linear, zero mass).
    ``rho + tau phi`` keeps the mass of ``rho``; if rounding moves it past
    the mass tolerance the reference is rescaled by the same tiny factor.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != d.grid.shape:
        raise ValidationError("phi must be given on the density grid")
    net, total = _signed_mass(d.grid, phi)
    if abs(net) > 1e-10 * max(total, 1e-300) and abs(net) > 1e-300:
        raise ValidationError(f"perturbation must have zero mass, got {net!r}")
    taus = np.asarray(taus, dtype=float)
    base = epot_q(d, ref, q)
    fp = potentials(d, q.owner)
    s, w = radial_rule(d.grid)
    phi_at = np.interp(s, d.grid, phi)
    limit = float(FOUR_PI * np.sum(w * s * s * fp.ulam_at(s) * phi_at))
    slopes = []
    for t in taus:
        rho_t = d.rho + t * phi
        if np.any(rho_t < -1e-15 * max(d.rho.max(), 1.0)):
            raise ValidationError(f"rho + tau*phi is negative for tau={t}")
        dt_ = RadialDensity(d.grid, np.maximum(rho_t, 0.0))
        # the mass of rho + tau phi equals that of rho up to rounding
        ref_t = ref if abs(dt_.total_mass - ref.total_mass) <= MASS_RTOL * ref.total_mass else \
            ReferenceDensity(ref.profile.with_rho(ref.profile.rho * dt_.total_mass / ref.total_mass))
        slopes.append((epot_q(dt_, ref_t, q) - base) / t)
    slopes = np.array(slopes)
    errors = np.abs(slopes - limit)
    order = float("nan")
    good = errors > 0
    if good.sum() >= 2:
        order = float(np.polyfit(np.log(taus[good]), np.log(errors[good]), 1)[0])
    return DerivativeCheck(taus=taus, slopes=slopes, limit=limit, errors=errors, order=order)


@dataclass(frozen=True)
class TaylorRemainder:
    remainder: float
    newton_part: float
    newton_identity: float
    q_part: float
    grad_l2_sq: float
    grad_l32_pow: float


def taylor_remainder(d: RadialDensity, eq, a: Optional[AnsatzFunction] = None,
                     mass_rtol: float = 1e-9) -> TaylorRemainder:
    """H_E(rho) - H_E(rho0) - d(rho, rho0) split into Newtonian and Mondian parts.

    ``newton_part`` is E^N(rho) - E^N(rho0) - int U^N_0 (rho - rho0) dx and
    ``newton_identity`` is -(1/8 pi) ||grad U^N_rho - grad U^N_0||_2^2,
    computed from fields rather than potentials; the two agree after an
    integration by parts.
    """
    base: RadialDensity = eq.density
    a = a if a is not None else eq.ansatz
    _check_mass(d.total_mass, base.total_mass, "taylor_remainder", mass_rtol)
    f = eq.fields.interp
    s, w = _union_rule(d, base)
    rho, rho0 = d.rho_at(s), base.rho_at(s)
    drho = rho - rho0
    vol = FOUR_PI * w * s * s

    # E^N is quadratic, so the expansion collapses to (1/2) int U^N_{rho-rho0} (rho-rho0);
    # evaluating it that way avoids subtracting two nearly equal energies
    newton_part = float(0.5 * np.sum(vol * (d.un_at(s) - base.un_at(s)) * drho))
    dg = d.gn_at(s) - base.gn_at(s)
    newton_identity = float(-0.5 * np.sum(w * s * s * dg * dg))

    q = qkernel(f)
    # E^Q relative to rho0 itself
    eq_d = float(-np.sum(w * s * s * (q_eval(q, d.gn_at(s)) - q_eval(q, base.gn_at(s)))))
    q_part = eq_d - float(np.sum(vol * eq.fields.ulam_at(s) * drho))

    cas = float(np.sum(vol * (a.value(rho) - a.value(rho0))))
    dist = distance_fluid(d, eq, mass_rtol)
    h_diff = (epot_newton(d) - epot_newton(base)) + eq_d + cas
    remainder = h_diff - dist
    return TaylorRemainder(
        remainder=remainder, newton_part=newton_part, newton_identity=newton_identity,
        q_part=q_part, grad_l2_sq=float(np.sum(vol * dg * dg)),
        grad_l32_pow=float(np.sum(vol * np.abs(dg) ** 1.5)),
    )
