import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dissqueeze.darkstate import (
    DegenerateMomentsError,
    OddEnsembleError,
    dark_state,
    dark_state_dphi,
    heisenberg_limit,
    jump_kernel,
    moments,
    phase_sensitivity,
    sql_limit,
)
from dissqueeze.spin import build_collective, symmetric_ladder

even_n = st.integers(1, 100).map(lambda k: 2 * k)
ratios = st.floats(1e-3, 0.999)


def residual(n, r, c):
    """|J c| for J = sin S+ + cos S-, from the ladder coefficients alone."""
    th = math.atan(r)
    a = symmetric_ladder(n)
    out = np.zeros(n + 1)
    out[1:] += math.sin(th) * a * c[:-1]
    out[:-1] += math.cos(th) * a * c[1:]
    return np.linalg.norm(out)


def test_limits():
    assert sql_limit(100) == 0.1
    assert heisenberg_limit(2) == pytest.approx(1 / 2)
    assert heisenberg_limit(10) == pytest.approx(1 / math.sqrt(60))


def test_small_example_by_hand():
    # N = 2: c0 = 1, c2 = -r / sqrt(1) * C(1,1) / sqrt(C(2,2)) = -r
    r = 0.5
    c = dark_state(2, r)
    np.testing.assert_allclose(c, np.array([1.0, 0.0, -r]) / math.sqrt(1 + r * r), atol=1e-15)
    mom = moments(c)
    assert mom.sz == pytest.approx((-1 + r * r) / (1 + r * r))


def test_endpoints():
    np.testing.assert_array_equal(dark_state(5, 0.0), np.eye(6)[0])
    np.testing.assert_array_equal(dark_state(5, math.inf), np.eye(6)[5])
    assert dark_state_dphi(16, 0.0) == pytest.approx(0.25, abs=1e-15)


def test_odd_ensemble_rejected():
    with pytest.raises(OddEnsembleError):
        dark_state(7, 0.3)


def test_negative_ratio_rejected():
    with pytest.raises(ValueError):
        dark_state(4, -0.1)


def test_degenerate_moments():
    # r = 1 for N = 2 sits at <S_z> = 0
    with pytest.raises(DegenerateMomentsError):
        phase_sensitivity(dark_state(2, 1.0))


def test_large_ensemble_stays_finite():
    c = dark_state(10000, 0.99)
    assert np.all(np.isfinite(c))
    assert np.linalg.norm(c) == pytest.approx(1.0)
    # ladder elements reach N/2, so round-off scales with N
    assert residual(10000, 0.99, c) < 1e-12 * 10000


@settings(max_examples=60, deadline=None)
@given(n=even_n, r=ratios)
def test_annihilated_by_jump(n, r):
    c = dark_state(n, r)
    assert residual(n, r, c) < 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 10).map(lambda k: 2 * k), r=ratios)
def test_matches_numerical_kernel(n, r):
    null = jump_kernel(n, math.atan(r))
    assert null.shape[1] == 1
    assert abs(null[:, 0] @ dark_state(n, r)) ** 2 > 1 - 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 10).map(lambda k: 2 * k + 1), r=st.floats(0.1, 0.999))
def test_odd_kernel_empty(n, r):
    # at small r the smallest singular value ~ r^(N/2) drops below the SVD cutoff
    assert jump_kernel(n, math.atan(r)).shape[1] == 0


@settings(max_examples=40, deadline=None)
@given(n=even_n, r=st.floats(0.01, 0.99))
def test_mirror_symmetry(n, r):
    a, b = dark_state(n, r), dark_state(n, 1 / r)[::-1]
    assert abs(a @ b) == pytest.approx(1.0, abs=1e-10)
    ma, mb = moments(a), moments(dark_state(n, 1 / r))
    assert ma.sz == pytest.approx(-mb.sz, rel=1e-9, abs=1e-9)
    assert ma.sx2 == pytest.approx(mb.sx2, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(n=even_n, r=ratios)
def test_sensitivity_between_limits(n, r):
    d = dark_state_dphi(n, r)
    assert heisenberg_limit(n) * (1 - 1e-9) <= d <= sql_limit(n) * (1 + 1e-12)


@pytest.mark.parametrize("n", [10, 100])
def test_sensitivity_decreases_with_ratio(n):
    d = [dark_state_dphi(n, r) for r in np.linspace(0, 0.99, 100)]
    assert np.all(np.diff(d) < 0)


@pytest.mark.parametrize("n", [4, 9])
def test_moments_against_matrices(n):
    rng = np.random.default_rng(n)
    c = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    c /= np.linalg.norm(c)
    mom = moments(c)

    def ev(kind, power=1):
        op = build_collective(kind, n).toarray()
        return (c.conj() @ np.linalg.matrix_power(op, power) @ c).real

    assert mom.sz == pytest.approx(ev("Sz"))
    assert mom.sx2 == pytest.approx(ev("Sx", 2))
    assert mom.sy2 == pytest.approx(ev("Sy", 2))
    assert mom.sz2 == pytest.approx(ev("Sz", 2))
    assert mom.s_total_sq == pytest.approx(ev("S2"))
    assert mom.d_sz == pytest.approx(mom.sz + n / 2)


def test_unsigned_state_is_not_dark():
    assert residual(10, 0.3, dark_state(10, 0.3, signed=False)) > 0.1


@pytest.mark.parametrize("r", [0.0, 0.3, 0.8])
def test_two_atom_variances(r):
    mom = moments(dark_state(2, r))
    assert mom.sx2 == pytest.approx((1 - r) ** 2 / (2 * (1 + r * r)), abs=1e-15)
    assert mom.sy2 == pytest.approx((1 + r) ** 2 / (2 * (1 + r * r)), abs=1e-15)


def test_two_atom_heisenberg_approach():
    assert dark_state_dphi(2, 0.99999) == pytest.approx(heisenberg_limit(2), rel=1e-4)


def test_four_atoms_unit_ratio_matches_kernel():
    null = jump_kernel(4, math.pi / 4)
    assert null.shape[1] == 1
    c = dark_state(4, 1.0)
    assert abs(null[:, 0] @ c) == pytest.approx(1.0, abs=1e-12)
    # c2 / c0 = -C(2,1) / sqrt(C(4,2))
    assert c[2] / c[0] == pytest.approx(-2 / math.sqrt(6))


def test_limit_values():
    assert heisenberg_limit(10) == pytest.approx(0.12910, abs=1e-5)
    assert sql_limit(10) == pytest.approx(0.31623, abs=1e-5)
    assert heisenberg_limit(100) == pytest.approx(0.014003, abs=1e-6)
