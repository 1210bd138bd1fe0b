"""MOND interpolation functions and the energy kernel Q.

The real acceleration is ``g = gN + lam(|gN|) gN``.  Two families are shipped:

* ``sqrt``:   lam(s) = sqrt(a0 / s)                (pure deep-MOND law)
* ``simple``: lam(s) = sqrt(1/4 + a0 / s) - 1/2    (simple nu-function)

Both satisfy ``Lambda1 / sqrt(s) <= lam(s)`` for ``s <= a0`` and
``lam(s) <= Lambda2 / sqrt(s)`` everywhere, with lam nonincreasing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

__all__ = [
    "Family",
    "InterpolationFunction",
    "QKernel",
    "qkernel",
    "lambda_eval",
    "q_eval",
    "check_hoelder",
    "check_q_taylor",
    "simple_q_closed_form",
]


class Family(str, enum.Enum):
    SQRT = "sqrt"
    SIMPLE = "simple"


@dataclass(frozen=True)
class InterpolationFunction:
    family: Family = Family.SQRT
    a0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (self.a0 > 0 and math.isfinite(self.a0)):
            raise DomainError(f"a0 must be positive and finite, got {self.a0}")

    @property
    def threshold(self) -> float:
        """Upper end of the small-acceleration range where the Lambda1 bound is asserted."""
        return self.a0

    @property
    def lambda1(self) -> float:
        if self.family is Family.SQRT:
            return math.sqrt(self.a0)
        # lam(s) sqrt(s) = sqrt(s/4 + a0) - sqrt(s)/2 decreases in s; minimum at s = a0
        return math.sqrt(self.a0) * (math.sqrt(1.25) - 0.5)

    @property
    def lambda2(self) -> float:
        return math.sqrt(self.a0)

    def __call__(self, sigma):
        """lam(sigma), vectorised; sigma must be > 0."""
        s = np.asarray(sigma, dtype=float)
        if np.any(~(s > 0)):
            raise DomainError("interpolation function needs sigma > 0")
        if self.family is Family.SQRT:
            out = np.sqrt(self.a0 / s)
        else:
            x = self.a0 / s
            out = x / (np.sqrt(0.25 + x) + 0.5)
        return out if out.ndim else float(out)

    def derivative(self, sigma):
        s = np.asarray(sigma, dtype=float)
        if np.any(~(s > 0)):
            raise DomainError("interpolation function needs sigma > 0")
        if self.family is Family.SQRT:
            out = -0.5 * np.sqrt(self.a0) * s**-1.5
        else:
            out = -0.5 * self.a0 / (s * s * np.sqrt(0.25 + self.a0 / s))
        return out if out.ndim else float(out)

    def field_term(self, g):
        """lam(g) * g for g >= 0, continuous extension 0 at g = 0.

        Written to avoid cancellation: for the simple family
        ``sqrt(g^2/4 + a0 g) - g/2 = a0 g / (sqrt(g^2/4 + a0 g) + g/2)``.
        """
        g = np.asarray(g, dtype=float)
        gp = np.maximum(g, 0.0)
        if self.family is Family.SQRT:
            out = np.sqrt(self.a0 * gp)
        else:
            root = np.sqrt(0.25 * gp * gp + self.a0 * gp)
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.where(gp > 0, self.a0 * gp / (root + 0.5 * gp), 0.0)
        return out if out.ndim else float(out)

    def boost(self, g):
        """Mondian acceleration (1 + lam(g)) g."""
        g = np.asarray(g, dtype=float)
        out = np.maximum(g, 0.0) + self.field_term(g)
        return out if out.ndim else float(out)


def lambda_eval(f: InterpolationFunction, sigma: float) -> float:
    return f(sigma)


# --- Q kernel ----------------------------------------------------------------

# 7-point Gauss / 15-point Kronrod nodes on [-1, 1]
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_KNODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KWEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes
_GIDX = np.array([1, 3, 5, 7, 9, 11, 13])
_GWEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15_pieces(func, a, b, rtol, max_depth=40):
    """Integrate ``func`` over each interval [a_i, b_i] with adaptive G7-K15 bisection.

    Vectorised over intervals; returns (values, abs_error_estimates).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total = np.zeros(a.shape)
    err = np.zeros(a.shape)
    owner = np.arange(a.size)
    lo, hi = a.ravel().copy(), b.ravel().copy()
    for depth in range(max_depth + 1):
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * _KNODES[None, :]
        fx = func(x)
        k = half * (fx @ _KWEIGHTS)
        g = half * (fx[:, _GIDX] @ _GWEIGHTS)
        e = np.abs(k - g)
        # abs floor keeps zero-width / zero-valued pieces from spinning
        ok = (e <= rtol * np.abs(k)) | (e <= 1e-300) | (depth == max_depth)
        np.add.at(total.ravel(), owner[ok], k[ok])
        np.add.at(err.ravel(), owner[ok], e[ok])
        bad = ~ok
        owner = np.repeat(owner[bad], 2)
        m = mid[bad]
        lo = np.column_stack([lo[bad], m]).ravel()
        hi = np.column_stack([m, hi[bad]]).ravel()
    return total, err


@dataclass(frozen=True)
class QKernel:
    """Q(v) = int_0^v lam(w) w dw for the owning interpolation function."""

    owner: InterpolationFunction
    closed_form: Optional[Callable[[np.ndarray], np.ndarray]] = None
    quadrature_tol: float = 1e-10

    def __call__(self, v):
        return q_eval(self, v)

    def quadrature(self, v):
        """Q by adaptive Gauss-Kronrod, ignoring any closed form.

        Uses w = t^2 so the integrand 2 t^3 lam(t^2) is smooth at the origin,
        and integrates between consecutive sorted arguments so that each
        piece is short; the pieces are then summed cumulatively.
        """
        v = np.asarray(v, dtype=float)
        if np.any(v < 0):
            raise DomainError("Q needs v >= 0")
        flat = v.ravel()
        order = np.argsort(flat, kind="stable")
        t = np.sqrt(flat[order])
        t_prev = np.concatenate([[0.0], t[:-1]])
        lam = self.owner

        def integrand(tt):
            out = np.zeros_like(tt)
            pos = tt > 0
            w = tt[pos] ** 2
            out[pos] = 2.0 * tt[pos] * lam.field_term(w)
            return out

        pieces, _ = _gk15_pieces(integrand, t_prev, t, self.quadrature_tol)
        out = np.empty_like(flat)
        out[order] = np.cumsum(pieces)
        out = out.reshape(v.shape)
        return out if out.ndim else float(out)


def _sqrt_q(a0):
    c = 2.0 / 3.0 * math.sqrt(a0)

    def q(v):
        return c * np.asarray(v, dtype=float) ** 1.5

    return q


def simple_q_closed_form(v, a0=1.0):
    """Analytic Q for the simple family (used as an independent oracle).

    With w = t^2 the integrand is t^2 sqrt(t^2 + 4 a0) - t^3.
    """
    t = np.sqrt(np.asarray(v, dtype=float))
    c = 4.0 * a0
    root = np.sqrt(t * t + c)
    prim = t * (2 * t * t + c) * root / 8.0 - c * c / 8.0 * np.log((t + root) / math.sqrt(c))
    return prim - t**4 / 4.0


def qkernel(f: InterpolationFunction, quadrature_tol: float = 1e-10) -> QKernel:
    closed = _sqrt_q(f.a0) if f.family is Family.SQRT else None
    return QKernel(owner=f, closed_form=closed, quadrature_tol=quadrature_tol)


def q_eval(q: QKernel, v):
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0) or np.any(np.isnan(v_arr)):
        raise DomainError("Q needs v >= 0")
    if q.closed_form is not None:
        out = q.closed_form(v_arr)
        return out if np.ndim(out) else float(out)
    return q.quadrature(v_arr)


# --- regularity checks ---------------------------------------------------------

def _random_vectors(rng, n, radius):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.uniform(0.0, radius, size=(n, 1))


def _vector_field_term(f, u):
    mag = np.linalg.norm(u, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(mag > 0, f.field_term(mag) / np.where(mag > 0, mag, 1.0), 0.0)
    return scale[..., None] * u


def hoelder_ratios(f: InterpolationFunction, u, v):
    """|F(u) - F(v)| / |u - v|^{1/2} with F(u) = lam(|u|) u; NaN where u == v."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    dist = np.linalg.norm(u - v, axis=1)
    num = np.linalg.norm(_vector_field_term(f, u) - _vector_field_term(f, v), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(dist > 0, num / np.sqrt(dist), np.nan)


def q_taylor_ratios(q: QKernel, u, v):
    """|Q(|u|) - Q(|v|) - F(v).(u - v)| / |u - v|^{3/2}; NaN where u == v."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    diff = u - v
    dist = np.linalg.norm(diff, axis=1)
    lin = np.sum(_vector_field_term(q.owner, v) * diff, axis=1)
    num = np.abs(q_eval(q, np.linalg.norm(u, axis=1)) - q_eval(q, np.linalg.norm(v, axis=1)) - lin)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(dist > 0, num / dist**1.5, np.nan)


def check_hoelder(f: InterpolationFunction, samples: int, seed: int, radius: float = 10.0) -> float:
    """Largest Hoelder-1/2 quotient of u -> lam(|u|) u over random pairs in the ball of `radius`."""
    if samples < 2:
        raise DomainError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    u = _random_vectors(rng, samples, radius)
    v = _random_vectors(rng, samples, radius)
    return float(np.nanmax(hoelder_ratios(f, u, v)))


def check_q_taylor(q: QKernel, samples: int, seed: int, radius: float = 10.0) -> float:
    """Largest first-order Taylor quotient of Q(|.|) over random pairs."""
    if samples < 2:
        raise DomainError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    u = _random_vectors(rng, samples, radius)
    v = _random_vectors(rng, samples, radius)
    return float(np.nanmax(q_taylor_ratios(q, u, v)))
