"""Exact cavity dark state in the symmetric sector and its spin moments."""

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as linalg
from scipy.special import gammaln

from .spin import check_ensemble, jump_operator, symmetric_ladder


class OddEnsembleError(ValueError):
    """No dark state exists in the symmetric sector for odd N and r > 0."""


class DegenerateMomentsError(ValueError):
    """Phase sensitivity is undefined because <S_z> vanishes."""


@dataclass(frozen=True)
class SpinMoments:
    """Collective spin moments at one instant (hbar = 1)."""

    n: int
    sz: float
    sx2: float
    sy2: float
    sz2: float
    s_total_sq: float

    @property
    def d_sz(self):
        """<S_z> + N/2, the depolarization from the fully down state."""
        return self.sz + self.n / 2

    @property
    def dphi(self):
        """Phase sensitivity sqrt(<S_x^2>)/|<S_z>|; NaN if <S_z> = 0."""
        if self.sz == 0.0:
            return math.nan
        return math.sqrt(max(self.sx2, 0.0)) / abs(self.sz)

    def as_dict(self):
        out = asdict(self)
        out["d_sz"] = self.d_sz
        out["dphi"] = self.dphi
        return out


def sql_limit(n):
    """Standard quantum limit 1/sqrt(N)."""
    n = check_ensemble(n)
    return 1.0 / math.sqrt(n)


def heisenberg_limit(n):
    """Limit 1/sqrt(N(N/2+1)) reached by the dark state as r -> 1."""
    n = check_ensemble(n)
    return 1.0 / math.sqrt(n * (n / 2 + 1))


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def dark_state(n, r, signed=True):
    """Normalized dark state of J = sin(theta) S+ + cos(theta) S-, tan(theta) = r.

    Amplitudes over the Dicke index m = 0..N; only even m are populated, with
    c_{2k} proportional to (-r)^k C(N/2, k) C(N, 2k)^(-1/2). Magnitudes are
    accumulated in log space so that N up to ~1e4 does not overflow.

    ``signed=False`` drops the alternating sign. That state is *not*
    annihilated by J and exists only as a negative control.
    """
    n = check_ensemble(n)
    r = float(r)
    if not r >= 0.0:
        raise ValueError(f"drive ratio must be non-negative, got {r}")
    c = np.zeros(n + 1)
    if r == 0.0:
        c[0] = 1.0
        return c
    if math.isinf(r):
        c[n] = 1.0
        return c
    if n % 2:
        raise OddEnsembleError(
            f"N={n} is odd: the jump operator has an empty kernel in the "
            "symmetric sector for r > 0"
        )
    k = np.arange(n // 2 + 1)
    logmag = k * math.log(r) + _log_binom(n / 2, k) - 0.5 * _log_binom(n, 2 * k)
    mag = np.exp(logmag - logmag.max())
    if signed:
        mag = np.where(k % 2 == 1, -mag, mag)
    c[::2] = mag
    return c / np.linalg.norm(c)


def jump_kernel(n, theta):
    """Orthonormal basis of the kernel of J in the symmetric sector (columns).

    Dense SVD-based oracle, intended for N of a few tens at most.
    """
    J = jump_operator(theta, n, "symmetric").toarray()
    return linalg.null_space(J, rcond=1e-12)


def moments(state):
    """Spin moments of a pure symmetric-sector state.

    Uses the bidiagonal ladder structure directly; no matrices are formed.
    """
    c = np.asarray(state, dtype=complex)
    n = c.size - 1
    check_ensemble(n)
    a = symmetric_ladder(n)
    up = np.zeros_like(c)
    up[1:] = a * c[:-1]  # S+ c
    down = np.zeros_like(c)
    down[:-1] = a * c[1:]  # S- c
    p = np.abs(c) ** 2
    mz = np.arange(n + 1) - n / 2
    S = n / 2
    sx2 = float(np.sum(np.abs(up + down) ** 2)) / 4
    sy2 = float(np.sum(np.abs(up - down) ** 2)) / 4
    return SpinMoments(
        n=n,
        sz=float(p @ mz),
        sx2=sx2,
        sy2=sy2,
        sz2=float(p @ mz**2),
        s_total_sq=S * (S + 1) * float(p.sum()),
    )


def phase_sensitivity(state):
    """sqrt(<S_x^2>)/|<S_z>| for a pure symmetric state."""
    mom = moments(state)
    if abs(mom.sz) <= 1e-12 * mom.n:
        raise DegenerateMomentsError("<S_z> vanishes; phase sensitivity undefined")
    return mom.dphi


def dark_state_dphi(n, r):
    return phase_sensitivity(dark_state(n, r))
