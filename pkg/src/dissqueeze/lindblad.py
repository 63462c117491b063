"""Lindblad evolution and steady states for cavity-pumped spin ensembles.

The master equation is kept in the normalization

    d rho/dt = -gamma_cav [{J^dag J, rho} - 2 J rho J^dag]
               - gamma_spont sum_{j, alpha} [{L^dag L, rho} - 2 L rho L^dag],

which is twice the conventional dissipator. Steady states do not depend on
this choice; transient rates quoted anywhere in the package carry the factor.
"""

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as splinalg
from scipy.integrate import RK45

from . import _kernels
from .darkstate import SpinMoments
from .spin import (
    FULL_SPACE_CAP,
    CapacityError,
    build_collective,
    check_ensemble,
    dicke_vectors,
    dimension,
    jump_operator,
    single_atom_jumps,
)

KERNEL_MIN_ATOMS = 5
ORACLE_MAX_ATOMS = 6


class IntegrationError(RuntimeError):
    """Time integration failed (step-size underflow or positivity loss)."""


class DegenerateKernelError(ValueError):
    """The Liouvillian has more than one stationary state."""

    def __init__(self, dimension, message=None):
        self.dimension = dimension
        super().__init__(message or f"Liouvillian kernel is {dimension}-dimensional")


@dataclass(frozen=True)
class ChannelSet:
    """Dissipative channels: one collective cavity jump and per-atom Raman jumps.

    ``basis`` defaults to ``"symmetric"`` for cavity-only models and to
    ``"full"`` as soon as single-atom scattering is present, since the latter
    leaves the symmetric sector.
    """

    n: int
    theta: float
    gamma_cav: float = 1.0
    gamma_spont: float = 0.0
    basis: str = None
    cap: int = FULL_SPACE_CAP

    def __post_init__(self):
        check_ensemble(self.n)
        if self.gamma_cav < 0 or self.gamma_spont < 0:
            raise ValueError("rates must be non-negative")
        basis = self.basis
        if basis is None:
            basis = "full" if self.gamma_spont > 0 else "symmetric"
            object.__setattr__(self, "basis", basis)
        if basis == "symmetric" and self.gamma_spont > 0:
            raise ValueError("single-atom scattering requires the full basis")
        if basis == "full" and self.n > self.cap:
            raise CapacityError(f"N={self.n} exceeds the full-space cap {self.cap}")
        dimension(self.n, basis)

    @classmethod
    def from_chi(cls, n, theta, chi, gamma_cav=1.0, basis=None, cap=FULL_SPACE_CAP):
        """Channels at cooperativity chi = gamma_cav/gamma_spont (inf -> cavity only)."""
        if not chi > 0:
            raise ValueError(f"cooperativity must be positive, got {chi}")
        gamma_spont = 0.0 if math.isinf(chi) else gamma_cav / chi
        return cls(n, theta, gamma_cav, gamma_spont, basis, cap)

    @property
    def dim(self):
        return dimension(self.n, self.basis)

    @property
    def chi(self):
        return math.inf if self.gamma_spont == 0 else self.gamma_cav / self.gamma_spont

    @property
    def gamma_ref(self):
        return self.gamma_cav * self.n + self.gamma_spont

    @property
    def use_kernels(self):
        return self.basis == "full" and self.n >= KERNEL_MIN_ATOMS

    @cached_property
    def jump(self):
        return jump_operator(self.theta, self.n, self.basis, self.cap).astype(complex)

    @cached_property
    def jump_hermitian_square(self):
        J = self.jump
        return (J.conj().T @ J).tocsr()

    @cached_property
    def single_jumps(self):
        if self.basis != "full":
            return []
        return [
            op.astype(complex)
            for j in range(1, self.n + 1)
            for op in single_atom_jumps(self.theta, j, self.n, self.cap)
        ]

    @cached_property
    def single_hermitian_square(self):
        dim = self.dim
        total = sparse.csr_matrix((dim, dim), dtype=complex)
        for L in self.single_jumps:
            total = total + L.conj().T @ L
        return total.tocsr()

    @cached_property
    def observables(self):
        return _Observables(self.n, self.basis, self.cap)

    def metadata(self):
        return {
            "N": self.n,
            "theta": self.theta,
            "ratio": math.tan(self.theta),
            "gamma_cav": self.gamma_cav,
            "gamma_spont": self.gamma_spont,
            "chi": self.chi,
            "basis": self.basis,
        }


class _Observables:
    """Sparse collective observables stored as (row, col, value) triplets."""

    def __init__(self, n, basis, cap):
        self.n = n
        sz = build_collective("Sz", n, basis, cap)
        sx = build_collective("Sx", n, basis, cap)
        sy = build_collective("Sy", n, basis, cap)
        ops = {
            "sz": sz,
            "sx2": sx @ sx,
            "sy2": sy @ sy,
            "sz2": sz @ sz,
            "s_total_sq": build_collective("S2", n, basis, cap),
        }
        self.triplets = {}
        for name, op in ops.items():
            coo = op.tocoo()
            self.triplets[name] = (coo.row, coo.col, coo.data)

    def expect(self, rho):
        vals = {}
        for name, (r, c, d) in self.triplets.items():
            vals[name] = float(np.real(np.sum(d * rho[c, r])))
        return SpinMoments(n=self.n, **vals)

    def expect_real(self, x):
        """Moments from the real carrier; valid because every observable
        here is a real symmetric matrix."""
        vals = {}
        for name, (r, c, d) in self.triplets.items():
            vals[name] = float(np.sum(d.real * x[c, r]))
        return SpinMoments(n=self.n, **vals)


def _check_rho(rho, channels):
    rho = np.asarray(rho)
    if rho.shape != (channels.dim, channels.dim):
        raise ValueError(
            f"density matrix of shape {rho.shape} does not match the "
            f"{channels.basis} basis of dimension {channels.dim}"
        )
    return rho


def rhs_cavity(rho, channels, method="auto"):
    """-gamma_cav [{J^dag J, rho} - 2 J rho J^dag] for a Hermitian rho.

    ``method`` selects the sparse operator path or the bit-flip kernels
    (``"auto"`` uses kernels in the full basis for N >= 5).
    """
    rho = _check_rho(rho, channels)
    if channels.gamma_cav == 0:
        return np.zeros_like(rho, dtype=complex)
    if _use_kernels(channels, method):
        s, c = math.sin(channels.theta), math.cos(channels.theta)
        x = _kernels.to_real(rho)
        return _kernels.from_real(_kernels.cavity_dissipator(s, c, x, channels.n, -channels.gamma_cav))
    J = channels.jump
    K = channels.jump_hermitian_square
    rho = rho.astype(complex, copy=False)
    return -channels.gamma_cav * (K @ rho + rho @ K - 2.0 * (J @ rho) @ J.conj().T)


def rhs_spont(rho, channels, method="auto"):
    """Single-atom Raman scattering part of the master equation."""
    rho = _check_rho(rho, channels)
    if channels.gamma_spont == 0:
        return np.zeros_like(rho, dtype=complex)
    if _use_kernels(channels, method):
        s, c = math.sin(channels.theta), math.cos(channels.theta)
        x = _kernels.to_real(rho)
        return _kernels.from_real(_kernels.spont_dissipator(s, c, x, channels.n, -channels.gamma_spont))
    rho = rho.astype(complex, copy=False)
    K = channels.single_hermitian_square
    out = K @ rho + rho @ K
    for L in channels.single_jumps:
        out = out - 2.0 * (L @ rho) @ L.conj().T
    return -channels.gamma_spont * out


def rhs_full(rho, channels, method="auto"):
    """Cavity plus single-atom Raman scattering, applied without a superoperator."""
    if channels.basis != "full":
        raise ValueError("rhs_full requires channels in the full basis")
    return rhs_cavity(rho, channels, method) + rhs_spont(rho, channels, method)


def rhs(rho, channels, method="auto"):
    """Right-hand side of the master equation for any channel set."""
    if _use_kernels(channels, method):
        rho = _check_rho(rho, channels)
        return _kernels.from_real(rhs_real(_kernels.to_real(rho), channels, method))
    out = rhs_cavity(rho, channels, method)
    if channels.gamma_spont > 0:
        out = out + rhs_spont(rho, channels, method)
    return out


def rhs_real(x, channels, method="auto"):
    """Right-hand side on the real carrier x = Re(rho) + Im(rho).

    All jump operators are real, so the generator maps the carrier of rho to
    the carrier of d rho/dt; Hermiticity holds by construction.
    """
    if _use_kernels(channels, method):
        s, c = math.sin(channels.theta), math.cos(channels.theta)
        return _kernels.lindblad_rhs(
            s, c, channels.gamma_cav, channels.gamma_spont, x, channels.n
        )
    return _kernels.to_real(rhs(_kernels.from_real(x), channels, method))


def _use_kernels(channels, method):
    if method == "auto":
        return channels.use_kernels
    if method == "kernel":
        if channels.basis != "full":
            raise ValueError("kernels exist only for the full basis")
        return True
    if method == "sparse":
        return False
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# states


def polarized_state(n, basis="symmetric", cap=FULL_SPACE_CAP):
    """All atoms in |->, i.e. S_z = -N/2 (Dicke index m = 0)."""
    rho = np.zeros((dimension(n, basis),) * 2, dtype=complex)
    if basis == "full" and n > cap:
        raise CapacityError(f"N={n} exceeds the full-space cap {cap}")
    rho[0, 0] = 1.0
    return rho


def pure_density(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_state(n, seed, kind="haar_pure", cap=FULL_SPACE_CAP):
    """Deterministic random pure state in the full product space.

    ``haar_pure``: normalized vector of i.i.d. standard complex Gaussians.
    ``product_random``: tensor product of independent Haar single-atom states.
    """
    n = check_ensemble(n)
    if n > cap:
        raise CapacityError(f"N={n} exceeds the full-space cap {cap}")
    rng = np.random.default_rng(seed)
    if kind == "haar_pure":
        psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    elif kind == "product_random":
        psi = np.ones(1, dtype=complex)
        for _ in range(n):
            local = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            psi = np.kron(psi, local / np.linalg.norm(local))
    else:
        raise ValueError(f"unknown random state kind {kind!r}")
    return pure_density(psi)


def symmetric_to_full(rho, n, cap=FULL_SPACE_CAP):
    """Embed a symmetric-sector density matrix into the full product space."""
    P = dicke_vectors(n, cap)
    return np.asarray(P @ (P @ np.asarray(rho)).conj().T).conj().T


def density_diagnostics(rho):
    """Trace error, Hermiticity error (max-abs) and purity of a density matrix."""
    tr = np.trace(rho)
    return {
        "trace_err": float(abs(tr - 1.0)),
        "herm_err": float(np.max(np.abs(rho - rho.conj().T))),
        "purity": float(np.real(np.vdot(rho, rho))),
    }


def min_eigenvalue(rho):
    return float(linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def fidelity_pure(rho, psi):
    """<psi| rho |psi> for a normalized pure reference state."""
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ rho @ psi))


# ---------------------------------------------------------------------------
# time evolution


@dataclass
class Trajectory:
    """Sampled solution of the master equation."""

    times: np.ndarray
    moments: list
    purity: np.ndarray
    trace_err: np.ndarray
    herm_err: np.ndarray
    converged: bool
    steady: SpinMoments
    rho_final: np.ndarray = field(repr=False)
    channels: ChannelSet = None
    settings: dict = field(default_factory=dict)
    min_eig: float = math.nan

    def column(self, name):
        return np.array([getattr(m, name) for m in self.moments])

    def columns(self):
        """Export columns in the stable CSV order."""
        return {
            "t": np.asarray(self.times),
            "Sz": self.column("sz"),
            "dSz": self.column("d_sz"),
            "Sx2": self.column("sx2"),
            "Sy2": self.column("sy2"),
            "S2": self.column("s_total_sq"),
            "dphi": self.column("dphi"),
            "purity": np.asarray(self.purity),
            "trace_err": np.asarray(self.trace_err),
        }


def default_t_max(channels):
    """200 / (gamma_cav N max(cos 2theta, 1/N)), or 200/gamma_spont without a cavity.

    Generous on purpose: runs stop at convergence, and slow modes near the
    fully depolarized states relax well below the pumping rate.
    """
    n = channels.n
    if channels.gamma_cav > 0:
        return 200.0 / (channels.gamma_cav * n * max(math.cos(2 * channels.theta), 1.0 / n))
    if channels.gamma_spont > 0:
        return 200.0 / channels.gamma_spont
    raise ValueError("at least one rate must be positive")


def evolve(
    rho0,
    channels,
    t_max=None,
    sample_dt=None,
    tol=1e-9,
    rtol=1e-8,
    atol=1e-10,
    method="auto",
    stop_on_convergence=True,
    positivity_tol=1e-6,
):
    """Integrate the master equation from ``rho0`` and sample spin moments.

    One Dormand-Prince 5(4) run with local error control covers [0, t_max];
    samples are read from its dense output. The state is carried as the
    real matrix Re(rho) + Im(rho), so every sampled rho is Hermitian by
    construction.

    Convergence: the RMS entry of d rho/dt, ||d rho/dt||_F / dim, stays below
    tol * gamma_ref at two consecutive samples, with gamma_ref = gamma_cav N +
    gamma_spont. The derivative is the one the solver already evaluated at
    the end of the step covering each sample. Step errors of order ``atol``
    keep that derivative above a floor, so ``tol`` much below ~10 * atol
    may never trigger.

    Reaching ``t_max`` unconverged is not an error (``converged=False`` and
    a RuntimeWarning); step-size failure and an eigenvalue below
    ``-positivity_tol`` raise :class:`IntegrationError`.
    """
    rho0 = _check_rho(rho0, channels)
    t_max = default_t_max(channels) if t_max is None else float(t_max)
    sample_dt = t_max / 200 if sample_dt is None else float(sample_dt)
    if not (t_max > 0 and sample_dt > 0 and tol > 0):
        raise ValueError("t_max, sample_dt and tol must be positive")
    dim = channels.dim
    threshold = tol * channels.gamma_ref
    check_every_sample = dim <= 64
    obs = channels.observables

    def fun(_t, y):
        return rhs_real(y.reshape(dim, dim), channels, method).ravel()

    times, moments, purity, trace_err = [], [], [], []

    def record(t, x):
        times.append(t)
        moments.append(obs.expect_real(x))
        purity.append(float(np.vdot(x, x)))  # ||rho||_F = ||x||_F
        trace_err.append(float(abs(np.trace(x) - 1.0)))
        if check_every_sample:
            _check_positivity(_kernels.from_real(x), t, positivity_tol)

    def rate(f):
        return float(np.linalg.norm(f)) / dim

    x0 = _kernels.to_real(rho0)
    record(0.0, x0)
    n_samples = int(math.ceil(t_max / sample_dt - 1e-9))
    sample_times = [min(k * sample_dt, t_max) for k in range(1, n_samples + 1)]

    solver = RK45(fun, 0.0, x0.ravel(), t_max, rtol=rtol, atol=atol)
    below = rate(solver.f) < threshold
    converged = False
    k = 0
    while solver.status == "running" and not (converged and stop_on_convergence):
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed at t={solver.t:g}: {message}")
        now_below = rate(solver.f) < threshold
        dense = None
        while k < n_samples and sample_times[k] <= solver.t:
            tk = sample_times[k]
            if tk == solver.t:
                y = solver.y
            else:
                dense = dense or solver.dense_output()
                y = dense(tk)
            record(tk, y.reshape(dim, dim))
            if below and now_below:
                converged = True
            below = now_below
            k += 1
            if converged and stop_on_convergence:
                break

    x_final = np.asarray(y).reshape(dim, dim) if k else x0
    rho = _kernels.from_real(x_final)
    lam = _check_positivity(rho, times[-1], positivity_tol)
    if not converged:
        warnings.warn(
            f"evolution not converged by t={times[-1]:g} (threshold {threshold:.2e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return Trajectory(
        times=np.array(times),
        moments=moments,
        purity=np.array(purity),
        trace_err=np.array(trace_err),
        herm_err=np.zeros(len(times)),
        converged=converged,
        steady=moments[-1],
        rho_final=rho,
        channels=channels,
        settings={
            "t_max": t_max,
            "sample_dt": sample_dt,
            "tol": tol,
            "rtol": rtol,
            "atol": atol,
            "method": "RK45 (Dormand-Prince 5(4))",
            "threshold": threshold,
            "rhs_evaluations": int(solver.nfev),
        },
        min_eig=lam,
    )


def _check_positivity(rho, t, positivity_tol):
    lam = min_eigenvalue(rho)
    if lam < -positivity_tol:
        raise IntegrationError(
            f"density matrix lost positivity at t={t:g}: smallest eigenvalue {lam:.3e}"
        )
    return lam


# ---------------------------------------------------------------------------
# brute-force steady state


def liouvillian(channels):
    """Explicit sparse superoperator acting on row-major vec(rho).

    vec(A rho B) = (A kron B^T) vec(rho). Only meant for small N.
    """
    dim = channels.dim
    eye = sparse.identity(dim, format="csr", dtype=complex)

    def dissipator(L, LdL):
        return (
            sparse.kron(LdL, eye)
            + sparse.kron(eye, LdL.T)
            - 2.0 * sparse.kron(L, L.conj())
        )

    total = sparse.csr_matrix((dim * dim, dim * dim), dtype=complex)
    if channels.gamma_cav > 0:
        total = total - channels.gamma_cav * dissipator(
            channels.jump, channels.jump_hermitian_square
        )
    if channels.gamma_spont > 0:
        K = channels.single_hermitian_square
        spont = sparse.kron(K, eye) + sparse.kron(eye, K.T)
        for L in channels.single_jumps:
            spont = spont - 2.0 * sparse.kron(L, L.conj())
        total = total - channels.gamma_spont * spont
    return total.tocsr()


def liouvillian_kernel(channels, rtol=1e-10):
    """Kernel of the Liouvillian via dense SVD: (basis vectors, singular values)."""
    if channels.n > ORACLE_MAX_ATOMS and channels.basis == "full":
        raise CapacityError(
            f"explicit Liouvillian limited to N <= {ORACLE_MAX_ATOMS} in the full basis"
        )
    L = liouvillian(channels).toarray()
    _, sv, vh = linalg.svd(L)
    cutoff = rtol * max(sv[0], 1.0)
    null = vh[sv <= cutoff].conj().T
    return null, sv


def steady_state_nullspace(channels, rtol=1e-10):
    """Stationary density matrix from the one-dimensional Liouvillian kernel.

    Raises :class:`DegenerateKernelError` if the kernel is larger, which is
    the generic situation without single-atom scattering.
    """
    null, _ = liouvillian_kernel(channels, rtol)
    if null.shape[1] == 0:
        raise DegenerateKernelError(0, "Liouvillian has no numerical kernel")
    if null.shape[1] != 1:
        raise DegenerateKernelError(null.shape[1])
    dim = channels.dim
    rho = null[:, 0].reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho)


def steady_state_sparse(channels):
    """Stationary state from sparse shift-invert at sigma=0 (larger N).

    Not an independent oracle of the kernel dimension; it returns the single
    eigenvector closest to zero.
    """
    L = liouvillian(channels).tocsc()
    vals, vecs = splinalg.eigs(L, k=1, sigma=0.0)
    dim = channels.dim
    rho = vecs[:, 0].reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho)
