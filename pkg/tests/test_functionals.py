import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mondeq.errors import DomainError, ValidationError
from mondeq.functionals import (AnsatzFunction, AnsatzKind, bump, casimir, default_reference,
                                distance_fluid, energy_report, epot_newton, epot_q,
                                epotq_directional_derivative, h_energy, mass_neutral_bumps,
                                taylor_remainder)
from mondeq.interpolation import q_eval, qkernel
from mondeq.radial import RadialDensity, make_grid, radial_rule, uniform_ball
from mondeq.verify import random_perturbation


def test_ansatz_validation():
    with pytest.raises(DomainError):
        AnsatzFunction.fluid(3.0)
    with pytest.raises(DomainError):
        AnsatzFunction.kinetic(1.5)
    with pytest.raises(DomainError):
        AnsatzFunction.fluid(1.0, 0.0)


@given(st.floats(0.1, 2.9), st.floats(0.01, 10.0), st.floats(1e-6, 1e3))
def test_ansatz_inverse_derivative_roundtrip(n, c, x):
    a = AnsatzFunction.fluid(n, c)
    assert a.inverse_derivative(a.derivative(x)) == pytest.approx(x, rel=1e-10)
    assert a.inverse_derivative(-1.0) == 0.0


def test_ansatz_describe_parse_roundtrip():
    a = AnsatzFunction.kinetic(0.5, 1.25)
    assert AnsatzFunction.parse(a.describe()) == a
    assert a.kind is AnsatzKind.KINETIC_PHI
    with pytest.raises(ValidationError):
        AnsatzFunction.parse("fluid:one")


def test_uniform_ball_energies(psi):
    ball = uniform_ball(1.0)
    assert epot_newton(ball) == pytest.approx(-0.6, abs=1e-10)
    assert casimir(ball, psi) == pytest.approx(3 / (8 * math.pi), rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.3, 3.0))
def test_newton_energy_scaling(m, r):
    # -3 M^2 / (5 R)
    assert epot_newton(uniform_ball(m, r)) == pytest.approx(-0.6 * m * m / r, rel=1e-9)


def test_epot_q_reference_and_mass_check(sqrt_f):
    q = qkernel(sqrt_f)
    ref = default_reference(1.0)
    assert abs(epot_q(uniform_ball(1.0), ref, q)) < 1e-14
    with pytest.raises(ValidationError):
        epot_q(uniform_ball(2.0), ref, q)


def test_epot_q_sqrt_against_closed_form(sqrt_f):
    # unit-mass ball of radius a against the unit reference, Q(g) = (2/3) g^{3/2}:
    # both interiors contribute 4/27, the gap [a, 1] gives (2/3) ln(1/a)
    a = 0.5
    d = uniform_ball(1.0, a, 400, outer_radius=1.0 + 1e-9)
    assert epot_q(d, default_reference(1.0), qkernel(sqrt_f)) == pytest.approx(2 / 3 * math.log(a), rel=1e-7)


def test_energy_chain_first_inequality(sqrt_f, rng):
    q = qkernel(sqrt_f)
    ref = default_reference(1.0)
    grid = make_grid(1.5, 300)
    s, w = radial_rule(ref.profile.grid)
    for _ in range(10):
        rho = bump(grid, rng.uniform(0.3, 1.0), rng.uniform(0.2, 0.5))
        d = RadialDensity(grid, rho)
        d = d.with_rho(rho / d.total_mass)
        assert -epot_q(d, ref, q) <= np.sum(w * s * s * q_eval(q, d.gn_at(s))) + 1e-12


def test_directional_derivative_converges(sqrt_f, simple_f):
    ball = uniform_ball(1.0)
    phi = mass_neutral_bumps(ball.grid, 0.3, 0.75, 0.2)
    for f in (sqrt_f, simple_f):
        chk = epotq_directional_derivative(ball, phi, default_reference(1.0), qkernel(f))
        assert chk.order >= 0.9
        assert chk.errors[-1] < chk.errors[0]


def test_directional_derivative_rejects_massive_phi(sqrt_f):
    ball = uniform_ball(1.0)
    with pytest.raises(ValidationError):
        epotq_directional_derivative(ball, bump(ball.grid, 0.5, 0.2), default_reference(1.0),
                                     qkernel(sqrt_f))


def test_mass_neutral_bumps_have_zero_mass():
    g = make_grid(1.0, 300)
    phi = mass_neutral_bumps(g, 0.2, 0.7, 0.15)
    pos = RadialDensity(g, np.maximum(phi, 0)).total_mass
    neg = RadialDensity(g, np.maximum(-phi, 0)).total_mass
    assert abs(pos - neg) <= 1e-12 * pos


def test_distance_zero_at_equilibrium(eq_model):
    assert abs(distance_fluid(eq_model.density, eq_model)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_positive_and_equilibrium_minimizes(eq_model, seed):
    rng = np.random.default_rng(seed)
    d = random_perturbation(eq_model, rng)
    q = qkernel(eq_model.interp)
    ref = default_reference(eq_model.density.total_mass)
    assert distance_fluid(d, eq_model) > 0
    assert h_energy(d, eq_model.ansatz, ref, q) >= h_energy(eq_model.density, eq_model.ansatz, ref, q) - 1e-12


def test_distance_needs_equal_mass(eq_model):
    with pytest.raises(ValidationError):
        distance_fluid(eq_model.density.with_rho(1.1 * eq_model.density.rho), eq_model)


def test_taylor_remainder_order_and_newton_identity(eq_model):
    R = eq_model.support_radius
    phi = mass_neutral_bumps(eq_model.density.grid, 0.3 * R, 0.7 * R, 0.2 * R, 0.5 * eq_model.central_value)
    taus = np.logspace(-1, -4, 4)
    rems = []
    for t in taus:
        tr = taylor_remainder(eq_model.density.with_rho(eq_model.density.rho + t * phi), eq_model)
        rems.append(abs(tr.remainder))
        assert tr.newton_part == pytest.approx(tr.newton_identity, rel=1e-8, abs=0)
        assert tr.newton_identity <= 0
    assert np.polyfit(np.log(taus), np.log(rems), 1)[0] >= 1.5


def test_newton_part_matches_energy_difference(eq_model):
    # at a large step the plain energy difference has no cancellation problem
    base = eq_model.density
    R = eq_model.support_radius
    phi = mass_neutral_bumps(base.grid, 0.3 * R, 0.7 * R, 0.2 * R, 0.5 * eq_model.central_value)
    d = base.with_rho(base.rho + 0.5 * phi)
    tr = taylor_remainder(d, eq_model)
    s, w = radial_rule(np.union1d(d.grid, base.grid))
    rho_lin = d.rho_at(s) - base.rho_at(s)
    direct = epot_newton(d) - epot_newton(base) - np.sum(4 * np.pi * w * s * s * base.un_at(s) * rho_lin)
    assert tr.newton_part == pytest.approx(direct, rel=1e-9)


def test_energy_report_fields(eq_model, psi):
    q = qkernel(eq_model.interp)
    rep = energy_report(eq_model.density, psi, default_reference(eq_model.density.total_mass), q)
    assert rep.norm_l1 == pytest.approx(eq_model.total_mass)
    assert rep.grad_l2_dev == 0.0 and rep.grad_l32_dev == 0.0
    assert rep.h_value == pytest.approx(rep.epot_newton + rep.epot_q + rep.casimir + rep.ekin)
    names = [n for n, _ in rep.rows()]
    assert names[:2] == ["epot_newton", "epot_q"]
