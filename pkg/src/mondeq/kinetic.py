"""Kinetic (collisionless) steady states built on top of fluid minimisers.

For a polytropic Casimir Phi(f) = c f^(1+1/k) the isotropic profile
g(v) = (Phi')^{-1}((mu - v^2/2)_+) integrates to a density

    rho(mu) = C_k mu^(k + 3/2),   C_k = (c (1 + 1/k))^{-k} 2^{3/2} 2 pi B(3/2, k + 1),

so the reduced fluid Casimir is again polytropic with n = k + 3/2.  The lift
takes a fluid equilibrium with that Psi and sets
f0(x, v) = (Phi')^{-1}(E0 - |v|^2/2 - U^M(r)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import beta as beta_fn

from .equilibrium import EquilibriumModel, SolverOptions, solve_for_mass
from .errors import DomainError, ValidationError
from .functionals import AnsatzFunction, AnsatzKind, default_reference, epot_newton, epot_q
from .interpolation import InterpolationFunction, qkernel
from .quadrature import gauss_legendre
from .radial import FOUR_PI, RadialDensity, radial_rule

__all__ = [
    "ReductionResult",
    "KineticModel",
    "IsotropicDF",
    "velocity_coefficient",
    "reduced_psi",
    "reduce_phi_to_psi",
    "lift_kinetic",
    "kinetic_distance",
    "velocity_scaled",
    "truncated",
    "LIFT_RESOLUTION",
]

LIFT_RESOLUTION = 4000


def _check_phi(phi: AnsatzFunction):
    if phi.kind is not AnsatzKind.KINETIC_PHI:
        raise DomainError("expected a kinetic ansatz Phi")
    if not (0.0 < phi.exponent < 1.5):
        raise DomainError("kinetic exponent k must lie in (0, 3/2)")


def velocity_coefficient(phi: AnsatzFunction) -> float:
    """C_k with int (Phi')^{-1}((mu - v^2/2)_+) dv = C_k mu^(k+3/2)."""
    k = phi.exponent
    return (phi.coefficient * phi.power) ** (-k) * 2.0**1.5 * 2.0 * math.pi * beta_fn(1.5, k + 1.0)


def reduced_psi(phi: AnsatzFunction) -> AnsatzFunction:
    """Closed-form reduced Casimir c' rho^(1 + 1/n), n = k + 3/2."""
    _check_phi(phi)
    n = phi.exponent + 1.5
    ck = velocity_coefficient(phi)
    c_prime = ck ** (-1.0 / n) / (1.0 + 1.0 / n)
    return AnsatzFunction.fluid(n, c_prime)


def _velocity_moments(phi: AnsatzFunction, mu: float):
    """(int g dv, int [v^2/2 g + Phi(g)] dv) for g = (Phi')^{-1}((mu - v^2/2)_+), by quadrature.

    mu - v^2/2 = (vm - v)(vm + v)/2 with vm = sqrt(2 mu); the (vm - v)^k factor
    goes into the algebraic quadrature weight.
    """
    if mu <= 0:
        return 0.0, 0.0
    k = phi.exponent
    cp = phi.coefficient * phi.power
    vm = math.sqrt(2.0 * mu)

    def dens(v):
        return FOUR_PI * v * v * ((vm + v) / 2.0) ** k / cp**k

    rho, _ = quad(dens, 0.0, vm, weight="alg", wvar=(0.0, k), epsabs=0.0, epsrel=1e-13, limit=200)

    def kin(v):
        return FOUR_PI * v * v * 0.5 * v * v * ((vm + v) / 2.0) ** k / cp**k

    def cas(v):
        return FOUR_PI * v * v * phi.coefficient * ((vm + v) / 2.0) ** (k + 1.0) / cp ** (k + 1.0)

    ek, _ = quad(kin, 0.0, vm, weight="alg", wvar=(0.0, k), epsabs=0.0, epsrel=1e-13, limit=200)
    cs, _ = quad(cas, 0.0, vm, weight="alg", wvar=(0.0, k + 1.0), epsabs=0.0, epsrel=1e-13, limit=200)
    return rho, ek + cs


@dataclass(frozen=True)
class ReductionResult:
    rho: np.ndarray
    mu: np.ndarray
    psi: np.ndarray
    n_fit: float
    c_fit: float
    n_exact: float
    c_exact: float

    @property
    def fitted(self) -> AnsatzFunction:
        return AnsatzFunction.fluid(self.n_fit, self.c_fit)


def reduce_phi_to_psi(phi: AnsatzFunction, rho_samples) -> ReductionResult:
    """Tabulate Psi(rho) = min over g with int g = rho of int (v^2/2 g + Phi(g)) dv.

    The minimiser is g = (Phi')^{-1}((mu - v^2/2)_+); mu is found by root
    finding on the quadrature value of int g dv.  A power law is then fitted
    to the positive samples.
    """
    _check_phi(phi)
    rho_samples = np.asarray(rho_samples, dtype=float)
    if np.any(rho_samples < 0):
        raise DomainError("density samples must be >= 0")
    n_exact = phi.exponent + 1.5
    exact = reduced_psi(phi)
    ck = velocity_coefficient(phi)
    mus = np.zeros_like(rho_samples)
    psis = np.zeros_like(rho_samples)
    for i, rho in enumerate(rho_samples):
        if rho == 0:
            continue
        guess = (rho / ck) ** (1.0 / n_exact)
        lo, hi = 0.5 * guess, 2.0 * guess
        while _velocity_moments(phi, lo)[0] > rho:
            lo *= 0.5
        while _velocity_moments(phi, hi)[0] < rho:
            hi *= 2.0
        mu = brentq(lambda m: _velocity_moments(phi, m)[0] - rho, lo, hi, xtol=1e-300, rtol=1e-14)
        mus[i] = mu
        psis[i] = _velocity_moments(phi, mu)[1]
    pos = rho_samples > 0
    if pos.sum() >= 2:
        slope, icpt = np.polyfit(np.log(rho_samples[pos]), np.log(psis[pos]), 1)
        n_fit = 1.0 / (slope - 1.0)
        c_fit = math.exp(icpt)
    else:
        n_fit, c_fit = float("nan"), float("nan")
    return ReductionResult(rho=rho_samples, mu=mus, psi=psis, n_fit=float(n_fit), c_fit=float(c_fit),
                           n_exact=n_exact, c_exact=exact.coefficient)


# --- distribution functions -------------------------------------------------------------------

class _FastPotential:
    """Cubic Hermite interpolant of U^M on the model grid (derivative gM), exact form outside."""

    def __init__(self, model: EquilibriumModel):
        fp = model.fields
        self._spline = CubicHermiteSpline(fp.grid, fp.UM, fp.gM)
        self._fields = fp
        self._outer = fp.grid[-1]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self._spline(np.minimum(r, self._outer))
        far = r > self._outer
        if np.any(far):
            out = np.where(far, self._fields.um_at(np.where(far, r, self._outer)), out)
        return out


@dataclass(frozen=True, eq=False)
class IsotropicDF:
    """f(r, v) = amplitude * a^-3 * phi((E0 - shift - E(r, v/a))_+), E = v^2/2 + U^M(r).

    ``velocity_scale`` a stretches velocities while keeping the spatial density;
    ``energy_shift`` lowers the cut-off.
    """

    phi: AnsatzFunction
    model: EquilibriumModel
    velocity_scale: float = 1.0
    energy_shift: float = 0.0
    amplitude: float = 1.0

    def _pot(self, r):
        return self.model.fields.um_at(r)

    def value(self, r, v, pot=None):
        pot = self._pot(r) if pot is None else pot
        a = self.velocity_scale
        eta = self.model.cutoff_energy - self.energy_shift - 0.5 * (np.asarray(v) / a) ** 2 - pot
        return self.amplitude * a**-3 * self.phi.inverse_derivative(eta)

    def vmax(self, r, pot=None):
        pot = self._pot(r) if pot is None else pot
        eta = np.maximum(self.model.cutoff_energy - self.energy_shift - pot, 0.0)
        return self.velocity_scale * np.sqrt(2.0 * eta)

    def density(self, r, pot=None):
        """Closed-form spatial density int f dv."""
        pot = self._pot(r) if pot is None else pot
        eta = np.maximum(self.model.cutoff_energy - self.energy_shift - pot, 0.0)
        return self.amplitude * velocity_coefficient(self.phi) * eta ** (self.phi.exponent + 1.5)

    def mass(self) -> float:
        s, w = radial_rule(self.model.density.grid)
        return float(FOUR_PI * np.sum(w * s * s * self.density(s)))


@dataclass(frozen=True, eq=False)
class KineticModel:
    phi: AnsatzFunction
    base: EquilibriumModel
    psi: AnsatzFunction
    reduction: Optional[ReductionResult] = None
    potential: _FastPotential = field(default=None, repr=False)

    def __post_init__(self):
        if self.potential is None:
            object.__setattr__(self, "potential", _FastPotential(self.base))

    @property
    def cutoff_energy(self) -> float:
        return self.base.cutoff_energy

    @property
    def velocity_support(self) -> float:
        """R1 = sqrt(2 (E0 - min U^M)); U^M is smallest at the centre."""
        return math.sqrt(2.0 * (self.base.cutoff_energy - float(self.base.fields.UM[0])))

    @property
    def support_radius(self) -> float:
        return self.base.support_radius

    @property
    def df(self) -> IsotropicDF:
        return IsotropicDF(self.phi, self.base)

    def f0(self, r, v):
        return self.df.value(r, v)

    def f0_fast(self, r, v):
        return self.df.value(r, v, pot=self.potential(r))

    def density_quadrature(self, r) -> np.ndarray:
        """int f0 dv at radii r by 1-D velocity quadrature."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        for i, ri in enumerate(r):
            mu = self.base.cutoff_energy - float(self.base.fields.um_at(ri))
            out[i] = _velocity_moments(self.phi, mu)[0] if mu > 0 else 0.0
        return out

    def density_error(self) -> float:
        """max |int f0 dv - rho0| over the grid nodes, relative to max rho0."""
        grid = self.base.density.grid
        rho = self.base.density.rho
        return float(np.max(np.abs(self.density_quadrature(grid) - rho)) / np.max(rho))

    def kinetic_and_casimir(self, n: int = 16):
        """(E_kin(f0), int Phi(f0) dx dv) by (r, v) double quadrature."""
        s, w = radial_rule(self.base.density.grid, n)
        eta = np.maximum(self.base.cutoff_energy - self.base.fields.um_at(s), 0.0)
        vm = np.sqrt(2.0 * eta)
        # v = vm sin(theta) absorbs the (vm - v)^k endpoint behaviour
        x, wt = gauss_legendre(48)
        th = 0.5 * math.pi * x
        v = vm[:, None] * np.sin(th)[None, :]
        dv = vm[:, None] * np.cos(th)[None, :] * 0.5 * math.pi * wt[None, :]
        f = self.phi.inverse_derivative(eta[:, None] - 0.5 * v * v)
        shell = FOUR_PI * v * v * dv
        ekin = np.sum(shell * 0.5 * v * v * f, axis=1)
        cas = np.sum(shell * self.phi.value(f), axis=1)
        vol = FOUR_PI * w * s * s
        return float(np.sum(vol * ekin)), float(np.sum(vol * cas))

    def h_b(self, reference_radius: float = 1.0) -> float:
        """H_B(f0) = E_pot^M(rho_f0) + E_kin(f0) + C(f0), with rho_f0 from velocity integrals."""
        grid = self.base.density.grid
        rho_f = self.density_quadrature(grid)
        rho_f[-1] = 0.0
        d = RadialDensity(grid, rho_f)
        q = qkernel(self.base.interp)
        ref = default_reference(d.total_mass, reference_radius)
        ek, cas = self.kinetic_and_casimir()
        return epot_newton(d) + epot_q(d, ref, q) + ek + cas

    def h_e(self, reference_radius: float = 1.0) -> float:
        from .functionals import casimir

        d = self.base.density
        q = qkernel(self.base.interp)
        ref = default_reference(d.total_mass, reference_radius)
        return epot_newton(d) + epot_q(d, ref, q) + casimir(d, self.psi)


def lift_kinetic(phi: AnsatzFunction, f: InterpolationFunction, mass: float,
                 opts: Optional[SolverOptions] = None, reduction_samples: int = 12,
                 bracket=None) -> KineticModel:
    _check_phi(phi)
    if not (mass > 0):
        raise DomainError("mass must be positive")
    psi = reduced_psi(phi)
    red = reduce_phi_to_psi(phi, np.logspace(-4, 1, reduction_samples))
    if abs(red.n_fit - red.n_exact) > 1e-3:
        raise ValidationError(f"reduced exponent {red.n_fit} differs from k + 3/2")
    # the H_B = H_E identity is checked at 1e-6; the grid error is O(h^2)
    opts = opts or SolverOptions(resolution=LIFT_RESOLUTION)
    base = solve_for_mass(psi, f, mass, bracket=bracket, opts=opts)
    return KineticModel(phi=phi, base=base, psi=psi, reduction=red)


def kinetic_distance(fm: IsotropicDF, f0: IsotropicDF, radial_nodes: int = 8,
                     velocity_nodes: int = 32, mass_rtol: float = 1e-8) -> float:
    """d(f, f0) = int int [Phi(f) - Phi(f0) + (E - E0)(f - f0)] dv dx.

    Both arguments are isotropic DFs over the same equilibrium potential.
    The velocity range is split at both cut-offs; each piece uses
    v = a + (b - a)(1 - cos t)/2, which clusters nodes at the kinks.
    """
    if fm.model is not f0.model:
        raise ValidationError("distributions must share the equilibrium potential")
    m1, m0 = fm.mass(), f0.mass()
    if abs(m1 - m0) > mass_rtol * max(m0, 1e-300):
        raise ValidationError(f"kinetic distance: masses differ ({m1!r} vs {m0!r})")
    model = f0.model
    phi = f0.phi
    s, w = radial_rule(model.density.grid, radial_nodes)
    pot = model.fields.um_at(s)
    e0 = model.cutoff_energy
    c1, c0 = fm.vmax(s, pot), f0.vmax(s, pot)
    lo_cut, hi_cut = np.minimum(c1, c0), np.maximum(c1, c0)
    x, wt = gauss_legendre(velocity_nodes)
    t = math.pi * x
    u = 0.5 * (1.0 - np.cos(t))
    du = 0.5 * np.sin(t) * math.pi * wt
    total = np.zeros_like(s)
    for a, b in ((np.zeros_like(s), lo_cut), (lo_cut, hi_cut)):
        width = (b - a)[:, None]
        v = a[:, None] + width * u[None, :]
        dv = width * du[None, :]
        fa = fm.value(s[:, None], v, pot[:, None])
        fb = f0.value(s[:, None], v, pot[:, None])
        energy = 0.5 * v * v + pot[:, None] - e0
        integrand = phi.value(fa) - phi.value(fb) + energy * (fa - fb)
        total += np.sum(FOUR_PI * v * v * dv * integrand, axis=1)
    return float(np.sum(FOUR_PI * w * s * s * total))


def velocity_scaled(km: KineticModel, eps: float) -> IsotropicDF:
    """f0 with velocities stretched by (1 + eps); the spatial density is unchanged."""
    return IsotropicDF(km.phi, km.base, velocity_scale=1.0 + eps)


def truncated(km: KineticModel, delta: float) -> IsotropicDF:
    """f0 cut at E0 - delta and rescaled to the original mass."""
    trial = IsotropicDF(km.phi, km.base, energy_shift=delta)
    m = trial.mass()
    if m <= 0:
        raise DomainError("truncation removes all mass")
    return IsotropicDF(km.phi, km.base, energy_shift=delta, amplitude=km.df.mass() / m)
