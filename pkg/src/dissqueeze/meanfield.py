"""Linearized moment equations around the fully down state.

The state is (d_sz, sx2) with d_sz = <S_z> + N/2. Both equations are linear,
so steady states and trajectories have closed forms. Rates here use the
conventional dissipator; the Lindblad engine's master equation runs twice as
fast (see :mod:`dissqueeze.lindblad`), which affects time scales only.

``as_printed=True`` drops the factor N from the inhomogeneous S_x^2 terms.
That variant is inconsistent with the SQL endpoint and is kept for
debugging only.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .darkstate import SpinMoments
from .spin import check_ensemble


class LinearizationBreakdown(ArithmeticError):
    """The linearized steady state leaves the regime <S_z> < 0."""


@dataclass(frozen=True)
class MeanFieldState:
    d_sz: float
    sx2: float

    def as_array(self):
        return np.array([self.d_sz, self.sx2])


def _check_theta(theta):
    theta = float(theta)
    if not 0.0 <= theta <= math.pi / 4:
        raise ValueError(f"theta must lie in [0, pi/4], got {theta}")
    if theta == math.pi / 4:
        warnings.warn(
            "cos(2 theta) = 0: the cavity restoring force vanishes",
            RuntimeWarning,
            stacklevel=3,
        )
    return theta


def _coefficients(theta, gamma_cav, gamma_spont, n, as_printed):
    """(decay, source) pairs so that dx/dt = -decay * x + source."""
    s2, c2t, sin2t = math.sin(theta) ** 2, math.cos(2 * theta), math.sin(2 * theta)
    a = 1.0 - 0.5 * sin2t
    scale = 1.0 if as_printed else n
    k_z = gamma_cav * n * c2t + gamma_spont
    src_z = gamma_cav * n * s2 + gamma_spont * n * s2
    k_x = gamma_cav * n * c2t + 2.0 * gamma_spont * a
    src_x = gamma_cav * n * scale * (1.0 - sin2t) / 4 + 2.0 * gamma_spont * a * scale / 4
    return (k_z, src_z), (k_x, src_x)


def mf_rhs(state, theta, gamma_cav, gamma_spont, n, as_printed=False):
    """Time derivative of (d_sz, sx2) under cavity pumping and single-atom decay."""
    n = check_ensemble(n)
    theta = _check_theta(theta)
    if gamma_cav < 0 or gamma_spont < 0:
        raise ValueError("rates must be non-negative")
    d_sz, sx2 = (state.d_sz, state.sx2) if isinstance(state, MeanFieldState) else state
    (k_z, src_z), (k_x, src_x) = _coefficients(theta, gamma_cav, gamma_spont, n, as_printed)
    return MeanFieldState(d_sz=-k_z * d_sz + src_z, sx2=-k_x * sx2 + src_x)


def _rates_from_chi(chi):
    chi = float(chi)
    if not chi > 0:
        raise ValueError(f"cooperativity must be positive, got {chi}")
    if math.isinf(chi):
        return 1.0, 0.0
    return chi, 1.0


def mf_steady_state(theta, chi, n, as_printed=False):
    """Fixed point (d_sz, sx2) at cooperativity chi (inf = cavity only)."""
    n = check_ensemble(n)
    theta = _check_theta(theta)
    gamma_cav, gamma_spont = _rates_from_chi(chi)
    (k_z, src_z), (k_x, src_x) = _coefficients(theta, gamma_cav, gamma_spont, n, as_printed)
    if k_z == 0 or k_x == 0:
        raise ZeroDivisionError("no restoring force: linearized fixed point is undefined")
    return MeanFieldState(d_sz=src_z / k_z, sx2=src_x / k_x)


def mf_steady(theta, chi, n, as_printed=False):
    """Steady moments of the linearized model.

    d_sz = N sin^2 t (chi + 1) / (N chi cos 2t + 1) and
    sx2 = (N/4) [N chi (1 - sin 2t) + 2a] / [N chi cos 2t + 2a], a = 1 - sin(2t)/2.
    Only sz and sx2 are modelled; the other moment fields are NaN.
    """
    fp = mf_steady_state(theta, chi, n, as_printed)
    return SpinMoments(
        n=int(n),
        sz=fp.d_sz - n / 2,
        sx2=fp.sx2,
        sy2=math.nan,
        sz2=math.nan,
        s_total_sq=math.nan,
    )


def mf_dphi(theta, chi, n, as_printed=False):
    """Phase sensitivity of :func:`mf_steady`; inf once <S_z> >= 0."""
    m = mf_steady(theta, chi, n, as_printed)
    if m.sz >= 0:
        return math.inf
    return m.dphi


def mf_sensitivity_cavity_only(theta, n):
    """sqrt(N (1 - sin 2t) cos 2t) / (N cos 2t - 2 sin^2 t), cavity pumping only."""
    n = check_ensemble(n)
    theta = _check_theta(theta)
    c2t = math.cos(2 * theta)
    denom = n * c2t - 2 * math.sin(theta) ** 2
    if denom <= 0:
        raise LinearizationBreakdown(
            f"N cos(2 theta) <= 2 sin^2(theta) at N={n}, theta={theta}: "
            "the linearized steady state is not polarized"
        )
    return math.sqrt(n * (1 - math.sin(2 * theta)) * c2t) / denom


def mf_trajectory(times, theta, gamma_cav, gamma_spont, n, state0=None, as_printed=False):
    """Closed-form solution of the linear equations sampled at ``times``.

    Default start is the coherent down state (0, N/4). Returns an array of
    shape (len(times), 2) with columns d_sz, sx2.
    """
    n = check_ensemble(n)
    theta = _check_theta(theta)
    t = np.asarray(times, dtype=float)
    x0 = MeanFieldState(0.0, n / 4) if state0 is None else MeanFieldState(*state0)
    out = np.empty((t.size, 2))
    pairs = _coefficients(theta, gamma_cav, gamma_spont, n, as_printed)
    for col, ((k, src), start) in enumerate(zip(pairs, (x0.d_sz, x0.sx2))):
        if k == 0:
            out[:, col] = start + src * t
        else:
            fixed = src / k
            out[:, col] = fixed + (start - fixed) * np.exp(-k * t)
    return out
