import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from dissqueeze.lindblad import ChannelSet, polarized_state, rhs
from dissqueeze.meanfield import (
    LinearizationBreakdown,
    MeanFieldState,
    mf_dphi,
    mf_rhs,
    mf_sensitivity_cavity_only,
    mf_steady,
    mf_steady_state,
    mf_trajectory,
)
from dissqueeze.spin import build_collective

thetas = st.floats(0.0, math.pi / 4 - 1e-6)
chis = st.floats(1e-6, 1e4)
sizes = st.integers(1, 10**8)


@settings(max_examples=80, deadline=None)
@given(theta=thetas, chi=chis, n=sizes)
def test_fixed_point_zeroes_rhs(theta, chi, n):
    fp = mf_steady_state(theta, chi, n)
    d = mf_rhs(fp, theta, chi, 1.0, n)
    assert abs(d.d_sz) <= 1e-9 * max(1.0, fp.d_sz * (n * chi + 1))
    assert abs(d.sx2) <= 1e-9 * max(1.0, fp.sx2 * (n * chi + 1))


@settings(max_examples=80, deadline=None)
@given(theta=thetas, chi=chis, n=sizes)
def test_closed_form(theta, chi, n):
    m = mf_steady_state(theta, chi, n)
    s2, c2, sin2 = math.sin(theta) ** 2, math.cos(2 * theta), math.sin(2 * theta)
    a = 1 - sin2 / 2
    d_sz = n * s2 * (chi + 1) / (n * chi * c2 + 1)
    sx2 = n / 4 * (n * chi * (1 - sin2) + 2 * a) / (n * chi * c2 + 2 * a)
    assert m.d_sz == pytest.approx(d_sz, rel=1e-9)
    assert m.sx2 == pytest.approx(sx2, rel=1e-9)
    assert math.isnan(mf_steady(theta, chi, n).sy2)


@settings(max_examples=40, deadline=None)
@given(chi=chis, n=sizes)
def test_sql_at_zero_angle(chi, n):
    assert mf_dphi(0.0, chi, n) == pytest.approx(1 / math.sqrt(n), rel=1e-12)


def test_as_printed_misses_sql():
    assert mf_dphi(0.0, 0.1, 1000, as_printed=True) == pytest.approx(1 / 1000)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0.0, 0.7), n=st.integers(10, 10**6))
def test_cavity_only_limit(theta, n):
    try:
        expected = mf_sensitivity_cavity_only(theta, n)
    except LinearizationBreakdown:
        assert mf_dphi(theta, math.inf, n) == math.inf
        return
    assert mf_dphi(theta, math.inf, n) == pytest.approx(expected, rel=1e-9)


def test_breakdown_and_angle_checks():
    with pytest.raises(LinearizationBreakdown):
        mf_sensitivity_cavity_only(0.78, 10)
    with pytest.raises(ValueError):
        mf_steady(0.9, 1.0, 10)
    with pytest.raises(ValueError):
        mf_steady(0.1, 0.0, 10)
    with pytest.warns(RuntimeWarning):
        mf_steady(math.pi / 4, 1.0, 10)
    # pi/4 with scattering still has a fixed point but <S_z> > 0 for large N chi
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert mf_dphi(math.pi / 4, 1.0, 100) == math.inf


def test_trajectory_matches_ode_solver():
    theta, gc, gs, n = 0.3, 0.02, 1.0, 500
    t = np.linspace(0, 2.0, 11)
    closed = mf_trajectory(t, theta, gc, gs, n)

    def f(_t, y):
        return mf_rhs(y, theta, gc, gs, n).as_array()

    sol = solve_ivp(f, (0, 2.0), [0.0, n / 4], t_eval=t, rtol=1e-11, atol=1e-9)
    np.testing.assert_allclose(closed, sol.y.T, rtol=1e-8)
    late = mf_trajectory([1e4], theta, gc, gs, n)[0]
    np.testing.assert_allclose(late, mf_steady_state(theta, gc / gs, n).as_array(), rtol=1e-9)


def test_trajectory_from_custom_start():
    out = mf_trajectory([0.0], 0.2, 1.0, 1.0, 10, state0=(1.0, 3.0))
    np.testing.assert_allclose(out[0], [1.0, 3.0])


@pytest.mark.parametrize("gc, gs", [(1.0, 0.0), (0.0, 1.0), (0.6, 0.3)])
def test_initial_depolarization_is_half_the_master_equation(gc, gs):
    # the master equation uses twice the conventional dissipator
    n, theta = 4, 0.3
    ch = ChannelSet(n, theta, gc, gs, basis="full")
    drho = rhs(polarized_state(n, "full"), ch)
    sz = build_collective("Sz", n, "full").toarray()
    mf = mf_rhs(MeanFieldState(0.0, n / 4), theta, gc, gs, n)
    assert np.trace(sz @ drho).real == pytest.approx(2 * mf.d_sz, rel=1e-12)


@pytest.mark.parametrize("n", [4, 40, 400])
def test_initial_squeezing_rate_up_to_finite_size(n):
    # exact cavity-only slope of <Sx^2> from the coherent state is 2 (1 - 1/N) times
    # the linearized one
    theta = 0.3
    drho = rhs(polarized_state(n), ChannelSet(n, theta))
    sx = build_collective("Sx", n).toarray()
    exact = np.trace(sx @ sx @ drho).real
    mf = mf_rhs(MeanFieldState(0.0, n / 4), theta, 1.0, 0.0, n)
    assert exact == pytest.approx(2 * mf.sx2 * (1 - 1 / n), rel=1e-12)


def test_rates_must_be_non_negative():
    with pytest.raises(ValueError):
        mf_rhs((0.0, 1.0), 0.1, -1.0, 1.0, 10)


def test_coherent_state_stationary_without_drive():
    d = mf_rhs((0.0, 25.0), 0.0, 1.0, 0.0, 100)
    assert (d.d_sz, d.sx2) == (0.0, 0.0)


def test_steady_examples():
    m = mf_steady(0.0, 3.0, 50)
    assert (m.d_sz, m.sx2) == (0.0, 12.5)
    th = math.pi / 8
    fp = mf_steady_state(th, 1.0, 100)
    assert fp.d_sz == pytest.approx(2 * 100 * math.sin(th) ** 2 / (100 * math.cos(2 * th) + 1))


def test_depolarization_near_quarter_pi():
    n, chi, eps = 10**8, 1.0, 1e-3
    fp = mf_steady_state(math.pi / 4 - eps, chi, n)
    assert fp.d_sz == pytest.approx((chi + 1) / (4 * chi * eps), rel=0.01)


def test_cavity_only_consistency_example():
    th = math.atan(0.5)
    assert mf_dphi(th, math.inf, 100) == pytest.approx(
        mf_sensitivity_cavity_only(th, 100), rel=1e-12
    )
    assert mf_sensitivity_cavity_only(0.0, 100) == pytest.approx(0.1, rel=1e-14)
    with pytest.raises(LinearizationBreakdown):
        mf_sensitivity_cavity_only(math.pi / 4 - 0.1 / 10, 10)
