"""Spherically symmetric densities, their Newtonian and Mondian fields and potentials.

Densities are piecewise linear in r between grid nodes, so the enclosed mass
and the Newtonian potential are evaluated in closed form at any radius.  The
Mondian correction U^lam(r) = int_0^r lam(gN) gN ds is integrated with
per-segment Gauss-Legendre rules.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ToleranceNotMetError, ValidationError
from .interpolation import Family, InterpolationFunction
from .quadrature import gauss_legendre, segment_nodes

__all__ = [
    "RadialDensity",
    "ReferenceDensity",
    "FieldProfile",
    "PotentialNormalization",
    "make_grid",
    "uniform_ball",
    "cumulative_mass",
    "newtonian_field",
    "mond_field",
    "potentials",
    "qumond_direct",
]

FOUR_PI = 4.0 * math.pi
_NODES = 16


class PotentialNormalization(str, enum.Enum):
    SURFACE_ZERO = "surface_zero"
    CENTER_ZERO = "center_zero"
    NEWTONIAN_AT_INFINITY = "newtonian_at_infinity"


def make_grid(outer_radius: float, resolution: int = 400, inner_fraction: float = 1e-6,
              geometric_nodes: Optional[int] = None) -> np.ndarray:
    """0, then geometric nodes from ``inner_fraction * outer_radius`` up to one
    uniform spacing h, then uniform steps h up to ``outer_radius``."""
    if not (outer_radius > 0) or resolution < 2:
        raise DomainError("need outer_radius > 0 and resolution >= 2")
    h = outer_radius / resolution
    r1 = inner_fraction * outer_radius
    if r1 >= h:
        return np.linspace(0.0, outer_radius, resolution + 1)
    if geometric_nodes is None:
        geometric_nodes = max(8, int(math.ceil(resolution / 20)))
    geo = r1 * (h / r1) ** (np.arange(geometric_nodes) / geometric_nodes)
    uni = np.arange(h, outer_radius - 0.5 * h, h)
    return np.concatenate([[0.0], geo, uni, [outer_radius]])


def _segment_mass(a, d, rho_a, beta):
    """4 pi int_a^{a+d} s^2 (rho_a + beta (s-a)) ds, written in the local coordinate."""
    return FOUR_PI * (rho_a * d * (a * a + a * d + d * d / 3.0)
                      + beta * d * d * (0.5 * a * a + 2.0 * a * d / 3.0 + 0.25 * d * d))


def _segment_moment(a, d, rho_a, beta):
    """int_a^{a+d} s (rho_a + beta (s-a)) ds."""
    return rho_a * d * (a + 0.5 * d) + beta * d * d * (0.5 * a + d / 3.0)


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Nonnegative piecewise-linear density on a radial grid starting at 0."""

    grid: np.ndarray
    rho: np.ndarray
    mass_cum: Optional[np.ndarray] = None

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        rho = np.array(self.rho, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or rho.shape != grid.shape:
            raise ValidationError("grid and rho must be 1-D arrays of equal length >= 2")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(rho)):
            raise ValidationError("grid and rho must be finite")
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise ValidationError("grid must start at 0 and be strictly increasing")
        if np.any(rho < 0):
            raise ValidationError("density must be nonnegative")
        h = np.diff(grid)
        beta = np.diff(rho) / h
        seg = _segment_mass(grid[:-1], h, rho[:-1], beta)
        mass = np.concatenate([[0.0], np.cumsum(seg)])
        mom = _segment_moment(grid[:-1], h, rho[:-1], beta)
        tail = np.concatenate([np.cumsum(mom[::-1])[::-1], [0.0]])
        for arr in (grid, rho, mass, beta, tail):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mass_cum", mass)
        object.__setattr__(self, "_beta", beta)
        object.__setattr__(self, "_tail", tail)

    @property
    def total_mass(self) -> float:
        return float(self.mass_cum[-1])

    @property
    def outer_radius(self) -> float:
        return float(self.grid[-1])

    @property
    def support_radius(self) -> float:
        pos = np.nonzero(self.rho > 0)[0]
        if pos.size == 0:
            return 0.0
        k = pos[-1]
        return float(self.grid[min(k + 1, self.grid.size - 1)])

    def _locate(self, r):
        idx = np.searchsorted(self.grid, r, side="right") - 1
        return np.clip(idx, 0, self.grid.size - 2)

    def rho_at(self, r):
        r = np.asarray(r, dtype=float)
        i = self._locate(r)
        val = self.rho[i] + self._beta[i] * (r - self.grid[i])
        out = np.where((r >= 0) & (r <= self.grid[-1]), np.maximum(val, 0.0), 0.0)
        return out if out.ndim else float(out)

    def mass_at(self, r):
        """Enclosed mass M(r), exact for the piecewise-linear density."""
        r = np.asarray(r, dtype=float)
        rc = np.clip(r, 0.0, self.grid[-1])
        i = self._locate(rc)
        a = self.grid[i]
        out = self.mass_cum[i] + _segment_mass(a, rc - a, self.rho[i], self._beta[i])
        out = np.maximum(out, 0.0)
        return out if out.ndim else float(out)

    def tail_moment_at(self, r):
        """int_r^R s rho(s) ds."""
        r = np.asarray(r, dtype=float)
        rc = np.clip(r, 0.0, self.grid[-1])
        i = self._locate(rc)
        a = self.grid[i]
        out = self._tail[i] - _segment_moment(a, rc - a, self.rho[i], self._beta[i])
        out = np.maximum(out, 0.0)
        return out if out.ndim else float(out)

    def gn_at(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, self.mass_at(r) / np.where(r > 0, r * r, 1.0), 0.0)
        return out if out.ndim else float(out)

    def un_at(self, r):
        """Newtonian potential -int rho(y)/|x-y| dy (zero at infinity)."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(r > 0, self.mass_at(r) / np.where(r > 0, r, 1.0), 0.0)
        out = -inner - FOUR_PI * self.tail_moment_at(r)
        return out if out.ndim else float(out)

    def with_rho(self, rho) -> "RadialDensity":
        return RadialDensity(self.grid, rho)

    def lp_norm(self, p: float) -> float:
        """(int rho^p dx)^{1/p} by the shared radial rule."""
        s, w = radial_rule(self.grid)
        return float((FOUR_PI * np.sum(w * s * s * self.rho_at(s) ** p)) ** (1.0 / p))


def radial_rule(grid, n: int = _NODES, sqrt_mask=None):
    """Flattened Gauss nodes/weights over all grid segments (sqrt map on the first one)."""
    grid = np.asarray(grid, dtype=float)
    if sqrt_mask is None:
        sqrt_mask = np.zeros(grid.size - 1, dtype=bool)
        sqrt_mask[0] = True
    s, w = segment_nodes(grid[:-1], grid[1:], n, sqrt_mask)
    return s.ravel(), w.ravel()


@dataclass(frozen=True, eq=False)
class ReferenceDensity:
    profile: RadialDensity

    def __post_init__(self):
        if self.profile.support_radius >= self.profile.outer_radius and self.profile.rho[-1] > 0:
            raise ValidationError("reference density must vanish at the outer grid node")

    @property
    def bar_radius(self) -> float:
        return self.profile.support_radius

    @property
    def total_mass(self) -> float:
        return self.profile.total_mass


def uniform_ball(mass: float, radius: float = 1.0, resolution: int = 200,
                 outer_radius: Optional[float] = None) -> RadialDensity:
    """Uniform ball; the density drops linearly to 0 over one tiny final segment.

    The step is resolved by a node pair at ``radius`` and ``radius*(1+1e-12)``,
    and the central value is corrected so the mass is exactly ``mass``.
    """
    if mass < 0 or radius <= 0:
        raise DomainError("need mass >= 0 and radius > 0")
    outer = radius * (1 + 1e-12) if outer_radius is None else outer_radius
    grid = np.linspace(0.0, radius, resolution + 1)
    if outer > radius * (1 + 1e-12):
        extra = np.linspace(radius * (1 + 1e-12), outer, max(2, int(resolution * (outer - radius) / radius)) + 1)
        grid = np.concatenate([grid, extra])
    else:
        grid = np.concatenate([grid, [radius * (1 + 1e-12)]])
    rho = np.where(grid <= radius, 1.0, 0.0)
    d = RadialDensity(grid, rho)
    scale = mass / d.total_mass if d.total_mass > 0 else 0.0
    return RadialDensity(grid, rho * scale)


def cumulative_mass(d: RadialDensity) -> RadialDensity:
    return RadialDensity(d.grid, d.rho)


def newtonian_field(d: RadialDensity) -> np.ndarray:
    return d.gn_at(d.grid)


def mond_field(d: RadialDensity, f: InterpolationFunction) -> np.ndarray:
    return f.boost(newtonian_field(d))


# --- potentials ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FieldProfile:
    grid: np.ndarray
    gN: np.ndarray
    gM: np.ndarray
    UN: np.ndarray
    Ulam: np.ndarray
    UM: np.ndarray
    normalization: PotentialNormalization
    offset: float
    density: RadialDensity = field(repr=False)
    interp: InterpolationFunction = field(repr=False)

    def gn_at(self, r):
        return self.density.gn_at(r)

    def gm_at(self, r):
        return self.interp.boost(self.density.gn_at(r))

    def un_at(self, r):
        return self.density.un_at(r)

    def ulam_at(self, r):
        return _ulam_at(self.density, self.interp, self.Ulam, r)

    def um_at(self, r):
        out = self.un_at(r) + self.ulam_at(r) + self.offset
        return out if np.ndim(out) else float(out)


def _mass_starts(d: RadialDensity) -> np.ndarray:
    """Segments whose left end carries zero enclosed mass (sqrt endpoint behaviour)."""
    return d.mass_cum[:-1] <= 0.0


def _h(d: RadialDensity, f: InterpolationFunction, s):
    return f.field_term(d.gn_at(s))


def _ulam_nodes(d: RadialDensity, f: InterpolationFunction) -> np.ndarray:
    s, w = segment_nodes(d.grid[:-1], d.grid[1:], _NODES, _mass_starts(d))
    seg = np.sum(w * _h(d, f, s), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def _exterior_ulam(d: RadialDensity, f: InterpolationFunction, r):
    """int_{R_N}^r lam(M/s^2) M/s^2 ds for r >= R_N."""
    r = np.asarray(r, dtype=float)
    big = d.grid[-1]
    m = d.total_mass
    if m <= 0:
        return np.zeros_like(r)
    if f.family is Family.SQRT:
        return math.sqrt(f.a0 * m) * np.log(r / big)
    # integrate in log s, panels of unit width
    out = np.zeros_like(r)
    x, w = gauss_legendre(_NODES)
    for j, rj in np.ndenumerate(r):
        L = math.log(rj / big)
        k = max(1, int(math.ceil(L)))
        edges = np.linspace(0.0, L, k + 1)
        t = edges[:-1, None] + np.diff(edges)[:, None] * x
        s = big * np.exp(t)
        vals = f.field_term(m / (s * s)) * s
        out[j] = np.sum(vals * np.diff(edges)[:, None] * w)
    return out


def _ulam_at(d: RadialDensity, f: InterpolationFunction, nodes: np.ndarray, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be >= 0")
    flat = r.ravel()
    out = np.empty_like(flat)
    big = d.grid[-1]
    inside = flat <= big
    if np.any(inside):
        ri = flat[inside]
        i = d._locate(ri)
        a = d.grid[i]
        s, w = segment_nodes(a, ri, _NODES, d.mass_cum[i] <= 0.0)
        out[inside] = nodes[i] + np.sum(w * _h(d, f, s), axis=1)
    if np.any(~inside):
        out[~inside] = nodes[-1] + _exterior_ulam(d, f, flat[~inside])
    out = out.reshape(r.shape)
    return out if out.ndim else float(out)


def potentials(d: RadialDensity, f: InterpolationFunction,
               norm: PotentialNormalization = PotentialNormalization.NEWTONIAN_AT_INFINITY) -> FieldProfile:
    norm = PotentialNormalization(norm)
    grid = d.grid
    gN = d.gn_at(grid)
    gM = f.boost(gN)
    UN = d.un_at(grid)
    Ulam = _ulam_nodes(d, f)
    if norm is PotentialNormalization.NEWTONIAN_AT_INFINITY:
        offset = 0.0
    elif norm is PotentialNormalization.CENTER_ZERO:
        offset = -float(UN[0] + Ulam[0])
    else:
        r0 = d.support_radius
        offset = -float(d.un_at(r0) + _ulam_at(d, f, Ulam, r0))
    UM = UN + Ulam + offset
    for arr in (gN, gM, UN, Ulam, UM):
        arr.setflags(write=False)
    return FieldProfile(grid=grid, gN=gN, gM=gM, UN=UN, Ulam=Ulam, UM=UM,
                        normalization=norm, offset=offset, density=d, interp=f)


# --- direct 3D QUMOND quadrature -----------------------------------------------------

def _inner_bracket(r: float, s: np.ndarray, m: int, panels: int) -> np.ndarray:
    """int_{-1}^{1} [(r mu - s)/|x-y|^3 + 1/s^2] dmu for every s.

    Uses mu = 1 - u^2; the kernel varies on the scale u ~ sqrt(delta) with
    delta = (r-s)^2 / (2rs), so panels in u are geometric from sqrt(delta)/8.
    """
    delta = (r - s) ** 2 / (2.0 * r * s)
    umax = math.sqrt(2.0)
    u0 = np.clip(np.sqrt(delta) / 8.0, 1e-9, umax / 4.0)
    k = np.arange(panels + 1) / panels
    geo = u0[:, None] * (umax / u0[:, None]) ** k[None, :]
    edges = np.concatenate([np.zeros((s.size, 1)), geo], axis=1)
    x, w = gauss_legendre(m)
    lo = edges[:, :-1, None]
    width = (edges[:, 1:] - edges[:, :-1])[:, :, None]
    u = lo + width * x
    wt = width * w
    u2 = u * u
    sc = s[:, None, None]
    dist2 = (r - sc) ** 2 + 2.0 * r * sc * u2
    mu = 1.0 - u2
    val = (r * mu - sc) / (dist2 * np.sqrt(dist2)) + 1.0 / (sc * sc)
    return np.sum(val * 2.0 * u * wt, axis=(1, 2))


def _direct_single(d: RadialDensity, f: InterpolationFunction, r: float, n: int) -> float:
    grid = d.grid
    big = grid[-1]
    a, b = grid[:-1], grid[1:]
    sq = _mass_starts(d)
    # split the segment containing r
    cut = (a < r) & (r < b)
    a2 = np.concatenate([a[~cut], a[cut], np.full(cut.sum(), r)])
    b2 = np.concatenate([b[~cut], np.full(cut.sum(), r), b[cut]])
    sq2 = np.concatenate([sq[~cut], sq[cut], np.zeros(cut.sum(), dtype=bool)])
    s_in, w_in = segment_nodes(a2, b2, n, sq2)
    s_list = [s_in.ravel()]
    w_list = [w_in.ravel()]
    start = big
    if r > big:
        # exterior below r in log-spaced panels
        k = max(1, int(math.ceil(math.log(r / big) / 0.5)))
        edges = big * (r / big) ** (np.arange(k + 1) / k)
        se, we = segment_nodes(edges[:-1], edges[1:], n)
        s_list.append(se.ravel())
        w_list.append(we.ravel())
        start = r
    # tail s = start / t, t in (0, 1]
    x, w = gauss_legendre(n)
    tedges = np.array([0.0, 0.25, 0.5, 1.0])
    t = (tedges[:-1, None] + np.diff(tedges)[:, None] * x).ravel()
    wt = (np.diff(tedges)[:, None] * w).ravel()
    s_list.append(start / t)
    w_list.append(wt * start / (t * t))
    s = np.concatenate(s_list)
    wts = np.concatenate(w_list)
    h = _h(d, f, s)
    keep = (h > 0) & (wts > 0)
    s, wts, h = s[keep], wts[keep], h[keep]
    if s.size == 0:
        return 0.0
    brk = _inner_bracket(r, s, n, panels=max(24, 2 * n))
    return float(0.5 * np.sum(wts * h * s * s * brk))


def qumond_direct(d: RadialDensity, f: InterpolationFunction, x: Sequence[float],
                  rtol: float = 1e-7, start_nodes: int = 8, max_refinements: int = 4) -> np.ndarray:
    """U^lam at radii ``x`` from the 3D QUMOND integral, without using the radial reduction.

    The azimuth is integrated analytically; the polar and radial integrals use
    Gauss rules split at s = |x| and graded towards y = x.  The node counts
    are doubled until two successive estimates agree to ``rtol``.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~np.isfinite(xs)) or np.any(xs < 0):
        raise DomainError("evaluation radii must be finite and >= 0")
    out = np.zeros_like(xs)
    scale = abs(_ulam_at(d, f, _ulam_nodes(d, f), d.grid[-1])) + 1e-300
    for j, r in enumerate(xs):
        if r == 0.0:
            continue
        n = start_nodes
        prev = _direct_single(d, f, r, n)
        for _ in range(max_refinements):
            n *= 2
            cur = _direct_single(d, f, r, n)
            if abs(cur - prev) <= rtol * max(abs(cur), 1e-6 * scale):
                out[j] = cur
                break
            prev = cur
        else:
            raise ToleranceNotMetError(
                f"qumond_direct did not converge at r={r}", estimate=cur, error=abs(cur - prev))
    return out
