import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mondeq.errors import DomainError
from mondeq.interpolation import (Family, InterpolationFunction, check_hoelder, check_q_taylor,
                                  hoelder_ratios, lambda_eval, q_eval, q_taylor_ratios, qkernel,
                                  simple_q_closed_form)

positive = st.floats(min_value=1e-8, max_value=1e8, allow_nan=False, allow_infinity=False)


def test_lambda_examples(sqrt_f, simple_f):
    assert lambda_eval(sqrt_f, 1.0) == 1.0
    assert lambda_eval(sqrt_f, 4.0) == 0.5
    assert lambda_eval(simple_f, 4.0 / 3.0) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan")])
def test_lambda_rejects_nonpositive(sqrt_f, sigma):
    with pytest.raises(DomainError):
        sqrt_f(sigma)


def test_bad_a0_and_family():
    with pytest.raises(DomainError):
        InterpolationFunction(Family.SQRT, 0.0)
    with pytest.raises(ValueError):
        InterpolationFunction("mystery", 1.0)


def test_bound_constants():
    s = InterpolationFunction("sqrt", 4.0)
    assert (s.lambda1, s.lambda2, s.threshold) == (2.0, 2.0, 4.0)
    m = InterpolationFunction("simple", 1.0)
    assert m.lambda1 == pytest.approx(math.sqrt(1.25) - 0.5, rel=1e-15)
    assert m.lambda1 == pytest.approx(0.6180339887, rel=1e-9)
    assert m.lambda2 == 1.0


@pytest.mark.parametrize("family", ["sqrt", "simple"])
def test_lambda_monotone_and_bounded(family):
    f = InterpolationFunction(family, 1.0)
    sig = np.logspace(-8, 8, 2000)
    lam = f(sig)
    assert np.all(lam >= 0)
    assert np.all(np.diff(lam) <= 0)
    assert np.all(lam * np.sqrt(sig) <= f.lambda2 * (1 + 1e-15))
    small = sig <= f.threshold
    assert np.all(lam[small] * np.sqrt(sig[small]) >= f.lambda1 * (1 - 1e-15))
    assert f(1e16) < 1e-7


@given(positive, st.sampled_from(["sqrt", "simple"]), st.floats(0.1, 10.0))
def test_field_term_matches_definition(g, family, a0):
    f = InterpolationFunction(family, a0)
    assert f.field_term(g) == pytest.approx(f(g) * g, rel=1e-12)
    assert f.boost(g) == pytest.approx(g + f(g) * g, rel=1e-12)


def test_field_term_zero_and_derivative(simple_f, sqrt_f):
    assert simple_f.field_term(0.0) == 0.0
    assert sqrt_f.field_term(0.0) == 0.0
    for f in (simple_f, sqrt_f):
        s = np.logspace(-3, 3, 20)
        h = 1e-6 * s
        fd = (f(s + h) - f(s - h)) / (2 * h)
        assert np.allclose(f.derivative(s), fd, rtol=1e-6)


def test_mond_field_examples(sqrt_f):
    assert sqrt_f.boost(0.25) == pytest.approx(0.75)
    assert sqrt_f.boost(1.0) == pytest.approx(2.0)
    assert sqrt_f.boost(1e-6) == pytest.approx(1e-6 + 1e-3, rel=1e-12)


def test_q_sqrt_examples(sqrt_f):
    q = qkernel(sqrt_f)
    assert q_eval(q, 0.0) == 0.0
    assert q_eval(q, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert q_eval(q, 4.0) == pytest.approx(16.0 / 3.0, rel=1e-15)
    with pytest.raises(DomainError):
        q_eval(q, -1.0)


def test_q_sqrt_quadrature_agrees_with_closed_form(sqrt_f):
    q = qkernel(sqrt_f)
    v = np.logspace(-6, 6, 100)
    assert np.max(np.abs(q.quadrature(v) / q(v) - 1)) <= q.quadrature_tol


def test_q_simple_against_analytic_oracle(simple_f):
    # the closed form cancels badly for tiny v; compare where it is trustworthy
    q = qkernel(simple_f)
    v = np.logspace(-3, 6, 200)
    assert np.allclose(q(v), simple_q_closed_form(v), rtol=1e-10, atol=0)
    assert q(0.0) == 0.0


def test_q_simple_scalar_and_unsorted(simple_f):
    q = qkernel(simple_f)
    v = np.array([5.0, 0.1, 2.0, 0.1, 0.0])
    out = q(v)
    for vi, oi in zip(v, out):
        assert q(float(vi)) == pytest.approx(oi, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("family", ["sqrt", "simple"])
def test_q_bounds_on_pairs(family):
    f = InterpolationFunction(family, 1.0)
    q = qkernel(f)
    pts = np.logspace(-5, 3, 45)
    u, v = np.meshgrid(pts, pts, indexing="ij")
    keep = u >= v
    u, v = u[keep], v[keep]
    dq = q(u) - q(v)
    d15 = u**1.5 - v**1.5
    assert u.size >= 1000
    assert np.all(dq <= 2 * f.lambda2 / 3 * d15 * (1 + 1e-12) + 1e-300)
    small = u <= f.threshold
    assert np.all(dq[small] >= 2 * f.lambda1 / 3 * d15[small] * (1 - 1e-12))
    assert np.all(np.diff(q(pts)) > 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 1e4), st.floats(1e-4, 1e4))
def test_q_simple_monotone_property(a, b):
    q = qkernel(InterpolationFunction("simple", 1.0))
    lo, hi = sorted((a, b))
    assert q(hi) >= q(lo)


def test_hoelder_examples(sqrt_f):
    u = np.zeros((1, 3))
    v = np.array([[1.0, 0.0, 0.0]])
    assert hoelder_ratios(sqrt_f, u, v)[0] == pytest.approx(1.0)
    assert np.isnan(hoelder_ratios(sqrt_f, v, v)[0])


def test_q_taylor_examples(sqrt_f):
    q = qkernel(sqrt_f)
    u = np.array([[1.0, 0.0, 0.0]])
    v = np.zeros((1, 3))
    assert q_taylor_ratios(q, u, v)[0] == pytest.approx(2.0 / 3.0)
    assert np.isnan(q_taylor_ratios(q, u, u)[0])


@pytest.mark.parametrize("family", ["sqrt", "simple"])
def test_hoelder_constant_is_stable(family):
    f = InterpolationFunction(family, 1.0)
    c1 = check_hoelder(f, 10_000, 1)
    c2 = check_hoelder(f, 20_000, 2)
    assert math.isfinite(c1) and c1 >= 1.0 - 1e-12 or family == "simple"
    assert abs(c2 - c1) / c1 < 0.2


def test_hoelder_sqrt_frozen_value(sqrt_f):
    # dense-sampling oracle, frozen: the supremum for lam = 1/sqrt is sqrt(2)
    c = check_hoelder(sqrt_f, 20_000, 2)
    assert 1.3 < c <= math.sqrt(2) + 1e-9


@pytest.mark.parametrize("family", ["sqrt", "simple"])
def test_q_taylor_constant_is_stable(family):
    q = qkernel(InterpolationFunction(family, 1.0))
    t1 = check_q_taylor(q, 10_000, 1)
    t2 = check_q_taylor(q, 20_000, 2)
    assert math.isfinite(t1)
    assert abs(t2 - t1) / t1 < 0.2


def test_checks_need_two_samples(sqrt_f):
    with pytest.raises(DomainError):
        check_hoelder(sqrt_f, 1, 0)
    with pytest.raises(DomainError):
        check_q_taylor(qkernel(sqrt_f), 1, 0)


def test_checks_are_deterministic(sqrt_f):
    assert check_hoelder(sqrt_f, 500, 7) == check_hoelder(sqrt_f, 500, 7)
