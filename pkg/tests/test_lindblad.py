import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dissqueeze import _kernels
from dissqueeze.darkstate import dark_state, moments
from dissqueeze.lindblad import (
    ChannelSet,
    DegenerateKernelError,
    density_diagnostics,
    evolve,
    fidelity_pure,
    liouvillian,
    liouvillian_kernel,
    min_eigenvalue,
    polarized_state,
    random_state,
    rhs,
    rhs_cavity,
    rhs_real,
    rhs_spont,
    steady_state_nullspace,
    steady_state_sparse,
    symmetric_to_full,
)
from dissqueeze.spin import CapacityError, dicke_vectors


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_channel_basis_defaults():
    assert ChannelSet(4, 0.2).basis == "symmetric"
    assert ChannelSet(4, 0.2, 1.0, 0.5).basis == "full"
    with pytest.raises(ValueError):
        ChannelSet(4, 0.2, 1.0, 0.5, basis="symmetric")
    with pytest.raises(CapacityError):
        ChannelSet(13, 0.2, 1.0, 1.0)
    with pytest.raises(ValueError):
        ChannelSet(4, 0.2, -1.0)


def test_from_chi():
    ch = ChannelSet.from_chi(3, 0.1, 4.0)
    assert (ch.gamma_cav, ch.gamma_spont, ch.chi) == (1.0, 0.25, 4.0)
    assert ChannelSet.from_chi(3, 0.1, math.inf).gamma_spont == 0.0
    with pytest.raises(ValueError):
        ChannelSet.from_chi(3, 0.1, 0.0)


def test_real_carrier_roundtrip():
    rho = random_density(8, 0)
    x = _kernels.to_real(rho)
    assert x.dtype == np.float64
    np.testing.assert_allclose(_kernels.from_real(x), rho, atol=1e-15)
    with pytest.raises(TypeError):
        _kernels.cavity_dissipator(0.1, 0.9, rho, 3)


@pytest.mark.parametrize("n", [5, 6])
@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4])
def test_kernels_match_sparse_operators(n, theta):
    ch = ChannelSet(n, theta, 0.7, 0.4, basis="full")
    rho = random_density(ch.dim, n)
    for func in (rhs_cavity, rhs_spont, rhs):
        a = func(rho, ch, method="kernel")
        b = func(rho, ch, method="sparse")
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_collective_kernels_match_matrices():
    n = 4
    rng = np.random.default_rng(1)
    x = rng.standard_normal((16, 16))
    from dissqueeze.spin import build_collective

    M = 0.3 * build_collective("S+", n, "full") + 0.8 * build_collective("S-", n, "full")
    M = M.toarray()
    np.testing.assert_allclose(_kernels.collective_left(0.3, 0.8, x, n), M @ x, atol=1e-13)
    np.testing.assert_allclose(_kernels.collective_right(0.3, 0.8, x, n), x @ M.T, atol=1e-13)


def test_rhs_superoperator_agree():
    ch = ChannelSet(3, 0.4, 1.0, 0.3, basis="full")
    rho = random_density(8, 3)
    vec = liouvillian(ch) @ rho.ravel()
    np.testing.assert_allclose(vec.reshape(8, 8), rhs(rho, ch), atol=1e-13)


def test_rhs_real_sparse_and_kernel():
    ch = ChannelSet(5, 0.25, 1.0, 0.5, basis="full")
    x = _kernels.to_real(random_density(32, 4))
    np.testing.assert_allclose(
        rhs_real(x, ch, "kernel"), rhs_real(x, ch, "sparse"), atol=1e-12
    )


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(2, 6),
    theta=st.floats(0, math.pi / 2),
    gc=st.floats(0, 3),
    gs=st.floats(0.01, 3),
    seed=st.integers(0, 2**16),
)
def test_generator_is_trace_free_and_hermitian(n, theta, gc, gs, seed):
    ch = ChannelSet(n, theta, gc, gs, basis="full")
    d = rhs(random_density(ch.dim, seed), ch)
    assert abs(np.trace(d)) < 1e-11
    np.testing.assert_allclose(d, d.conj().T, atol=1e-11)


def test_symmetric_and_full_cavity_agree():
    n, th = 4, 0.35
    rho = random_density(n + 1, 5)
    sym = rhs(rho, ChannelSet(n, th))
    full = rhs(symmetric_to_full(rho, n), ChannelSet(n, th, basis="full"))
    P = dicke_vectors(n).toarray()
    np.testing.assert_allclose(P.T @ full @ P, sym, atol=1e-12)


def test_dark_state_is_stationary():
    n, r = 6, 0.4
    c = dark_state(n, r)
    ch = ChannelSet(n, math.atan(r))
    assert np.max(np.abs(rhs(np.outer(c, c), ch))) < 1e-12


def test_states():
    rho = polarized_state(3, "full")
    assert rho[0, 0] == 1 and np.trace(rho) == 1
    a, b = random_state(4, 11), random_state(4, 11)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, random_state(4, 12))
    p = random_state(4, 2, kind="product_random")
    assert density_diagnostics(p)["purity"] == pytest.approx(1.0)
    assert min_eigenvalue(p) > -1e-12
    with pytest.raises(ValueError):
        random_state(4, 0, kind="thermal")


def test_nullspace_unique_with_scattering():
    ch = ChannelSet.from_chi(3, math.atan(0.3), 2.0)
    null, _ = liouvillian_kernel(ch)
    assert null.shape[1] == 1
    rho = steady_state_nullspace(ch)
    assert np.trace(rho) == pytest.approx(1.0)
    assert min_eigenvalue(rho) > -1e-12
    np.testing.assert_allclose(steady_state_sparse(ch), rho, atol=1e-9)


def test_cavity_only_kernel_is_degenerate():
    # collective decay conserves total spin, so every S sector has its own steady state
    ch = ChannelSet(4, math.atan(0.3), basis="full")
    with pytest.raises(DegenerateKernelError) as info:
        steady_state_nullspace(ch)
    assert info.value.dimension > 1


def test_oracle_size_cap():
    with pytest.raises(CapacityError):
        liouvillian_kernel(ChannelSet.from_chi(7, 0.2, 1.0))


def test_evolve_reaches_nullspace():
    ch = ChannelSet.from_chi(2, math.atan(0.3), 2.0)
    traj = evolve(polarized_state(2, "full"), ch, tol=1e-10, rtol=1e-10, atol=1e-12)
    assert traj.converged
    np.testing.assert_allclose(traj.rho_final, steady_state_nullspace(ch), atol=1e-8)
    assert traj.trace_err.max() < 1e-10


def test_evolve_pumps_into_dark_state():
    n, r = 6, 0.3
    ch = ChannelSet(n, math.atan(r))
    traj = evolve(polarized_state(n), ch)
    assert traj.converged
    assert fidelity_pure(traj.rho_final, dark_state(n, r)) > 1 - 1e-8
    assert traj.steady.dphi == pytest.approx(moments(dark_state(n, r)).dphi, rel=1e-6)


def test_evolve_kernel_path_conserves_total_spin():
    n = 5
    ch = ChannelSet(n, math.atan(0.2), basis="full")
    traj = evolve(random_state(n, 3), ch, t_max=0.5, stop_on_convergence=False)
    s2 = traj.column("s_total_sq")
    assert np.ptp(s2) < 1e-10 * n * n
    assert traj.trace_err.max() < 1e-10
    assert traj.times[-1] == pytest.approx(0.5)


def test_evolve_warns_when_unconverged():
    ch = ChannelSet.from_chi(2, 0.3, 1.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = evolve(polarized_state(2, "full"), ch, t_max=0.05)
    assert not traj.converged
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_evolve_rejects_bad_input():
    ch = ChannelSet(3, 0.2)
    with pytest.raises(ValueError):
        evolve(polarized_state(3, "full"), ch)
    with pytest.raises(ValueError):
        evolve(polarized_state(3), ch, t_max=-1.0)


def test_trajectory_columns():
    ch = ChannelSet(4, 0.2)
    traj = evolve(polarized_state(4), ch, t_max=1.0, sample_dt=0.25, stop_on_convergence=False)
    cols = traj.columns()
    assert list(cols) == ["t", "Sz", "dSz", "Sx2", "Sy2", "S2", "dphi", "purity", "trace_err"]
    np.testing.assert_allclose(cols["t"], [0, 0.25, 0.5, 0.75, 1.0])
    assert cols["Sz"][0] == -2.0


def test_rhs_examples():
    ch = ChannelSet(1, math.pi / 4, basis="full")
    d = rhs(np.eye(2) / 2, ch)
    assert abs(np.trace(d)) < 1e-15
    np.testing.assert_allclose(d, d.conj().T)
    from dissqueeze.lindblad import rhs_full

    ch = ChannelSet(3, 0.3, 1.0, 0.0, basis="full")
    rho = random_density(8, 9)
    np.testing.assert_allclose(rhs_full(rho, ch), rhs_cavity(rho, ch), atol=1e-14)


def test_zero_angle_pumps_to_bottom():
    ch = ChannelSet.from_chi(2, 0.0, 1.0)
    target = np.zeros((4, 4))
    target[0, 0] = 1
    np.testing.assert_allclose(steady_state_nullspace(ch), target, atol=1e-10)


def test_two_atom_oracle_example():
    ch = ChannelSet.from_chi(2, math.atan(0.3), 2.0)
    traj = evolve(polarized_state(2, "full"), ch, tol=1e-10, rtol=1e-10, atol=1e-12)
    assert np.linalg.norm(traj.rho_final - steady_state_nullspace(ch)) <= 1e-8


def test_random_states_differ():
    a, b = random_state(3, 1), random_state(3, 2)
    assert abs(np.trace(a @ b)) < 1 - 1e-6
