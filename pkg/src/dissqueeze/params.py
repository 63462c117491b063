"""Laboratory parameters to model rates.

All rates and frequencies are angular (rad/s), SI units elsewhere. Nothing
is inferred about units; a value in Hz will silently give wrong answers.
"""

import math
import warnings
from dataclasses import asdict, dataclass, fields

from scipy.constants import epsilon_0, hbar

# Two-photon validity thresholds for the "much smaller/larger" conditions.
VALIDITY_RATIO = 10.0

# 87Rb D1 dipole weights relative to <J=1/2||er||J'=1/2>: cavity leg from |->
# to (e-, e+) and control leg from |+> to (e-, e+).
RB87_D1_CAVITY_WEIGHTS = (math.sqrt(1 / 4), math.sqrt(1 / 12))
RB87_D1_CONTROL_WEIGHTS = (-math.sqrt(1 / 4), -math.sqrt(1 / 12))


class ValidityWarning(UserWarning):
    """An approximation behind the effective model is not well satisfied."""


def coupling_from_dipole(dipole, mode_volume, omega_a):
    """g = (d/hbar) sqrt(hbar omega_a / (2 eps0 V))."""
    if dipole <= 0 or mode_volume <= 0 or omega_a <= 0:
        raise ValueError("dipole, mode volume and frequency must be positive")
    return dipole / hbar * math.sqrt(hbar * omega_a / (2 * epsilon_0 * mode_volume))


@dataclass(frozen=True)
class CavityAtomParams:
    kappa: float
    gamma: float
    delta: float
    omega_plus: float
    omega_minus: float
    g: float = None
    gamma0: float = 0.0
    delta_prime: float = None
    dipole: float = None
    mode_volume: float = None
    omega_a: float = None

    def __post_init__(self):
        if self.g is None:
            if None in (self.dipole, self.mode_volume, self.omega_a):
                raise ValueError("give g or all of dipole, mode_volume, omega_a")
            object.__setattr__(
                self, "g", coupling_from_dipole(self.dipole, self.mode_volume, self.omega_a)
            )
        if self.delta_prime is None:
            object.__setattr__(self, "delta_prime", self.delta)
        for name in ("g", "kappa", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")
        if self.omega_plus < 0 or self.omega_minus < 0:
            raise ValueError("control Rabi frequencies must be non-negative")
        if self.omega_plus == 0 and self.omega_minus == 0:
            raise ValueError("at least one control field must be on")
        if self.delta == 0 or self.delta_prime == 0:
            raise ValueError("detunings must be non-zero")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items() if v is not None})

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DerivedRates:
    gamma_cav: float
    gamma_spont: float
    chi: float
    theta: float
    ratio: float
    flags: tuple
    metadata: dict

    def as_dict(self):
        out = asdict(self)
        out["flags"] = list(self.flags)
        return out


def validity_flags(p):
    """Names of violated approximations (empty when all hold)."""
    flags = []
    if p.gamma * VALIDITY_RATIO > abs(p.delta):
        flags.append("gamma_not_small_vs_delta")
    if p.kappa < VALIDITY_RATIO * abs(p.delta):
        flags.append("kappa_not_large_vs_delta")
    return flags


def derive_rates(p, warn=True):
    """gamma_cav, gamma_spont, chi and theta from physical parameters.

    gamma_cav = g^2 W^2 / (D^2 kappa), gamma_spont = (gamma + gamma0) W^2 / D^2
    with W^2 = W+^2 + W-^2 and D = |delta|. chi = g^2 / (kappa (gamma + gamma0))
    and tan(theta) = W+ / W-.
    """
    omega_sq = p.omega_plus**2 + p.omega_minus**2
    det_sq = p.delta**2
    linewidth = p.gamma + p.gamma0
    gamma_cav = p.g**2 * omega_sq / (det_sq * p.kappa)
    gamma_spont = linewidth * omega_sq / det_sq
    flags = validity_flags(p)
    if warn:
        for flag in flags:
            warnings.warn(f"validity condition violated: {flag}", ValidityWarning, stacklevel=2)
    theta = math.atan2(p.omega_plus, p.omega_minus)
    ratio = math.inf if p.omega_minus == 0 else p.omega_plus / p.omega_minus
    return DerivedRates(
        gamma_cav=gamma_cav,
        gamma_spont=gamma_spont,
        chi=p.g**2 / (p.kappa * linewidth),
        theta=theta,
        ratio=ratio,
        flags=tuple(flags),
        metadata={
            "detuning_asymmetry": p.delta_prime / p.delta,
            "linewidth": linewidth,
            "omega_sq": omega_sq,
        },
    )


def raman_rate_total(g, g2, omega_ctrl, omega_ctrl2, delta, delta_hfs):
    """Two-pathway Raman amplitude g W / D + g2 W2 / (D + d_hfs), signs kept."""
    if delta == 0 or delta + delta_hfs == 0:
        raise ZeroDivisionError("Raman pathway on single-photon resonance")
    return g * omega_ctrl / delta + g2 * omega_ctrl2 / (delta + delta_hfs)


def rb87_d1_raman_total(delta, delta_hfs, e_field, omega_c, mode_volume, reduced_element):
    """Raman amplitude for the 87Rb D1 scheme through both excited hyperfine levels.

    Builds g, g2 and the control Rabi frequencies from the dipole weights,
    so the result carries the square of the reduced matrix element and the
    overall sign of the control-leg weights.
    """
    field_unit = math.sqrt(omega_c / (2 * hbar * epsilon_0 * mode_volume))
    g, g2 = (w * reduced_element * field_unit for w in RB87_D1_CAVITY_WEIGHTS)
    om, om2 = (w * reduced_element * e_field / hbar for w in RB87_D1_CONTROL_WEIGHTS)
    return raman_rate_total(g, g2, om, om2, delta, delta_hfs)


@dataclass(frozen=True)
class RepumpResult:
    gamma_out_plus: float
    gamma_out_minus: float
    gamma_repump: float
    external_fraction: float
    weak_drive: bool
    zero_repump: bool

    def as_dict(self):
        return asdict(self)


def repump_populations(omega_repump, gamma0, gamma_plus, gamma_minus, omega_pm, delta_pm):
    """Leak rates out of the spin system against the repump rate.

    ``omega_pm`` and ``delta_pm`` are (plus, minus) pairs. The fraction is
    NaN when the repump is off (flagged by ``zero_repump``); ``weak_drive``
    records whether omega_repump <= gamma0 holds.
    """
    (om_p, om_m), (de_p, de_m) = omega_pm, delta_pm
    if de_p == 0 or de_m == 0:
        raise ZeroDivisionError("detunings must be non-zero")
    if gamma_plus + gamma_minus <= 0:
        raise ValueError("excited-state linewidths must be positive")
    out_p = gamma0 * (om_p / de_p) ** 2
    out_m = gamma0 * (om_m / de_m) ** 2
    repump = omega_repump**2 / (gamma_plus + gamma_minus)
    zero = repump == 0
    return RepumpResult(
        gamma_out_plus=out_p,
        gamma_out_minus=out_m,
        gamma_repump=repump,
        external_fraction=math.nan if zero else (out_p + out_m) / repump,
        weak_drive=bool(omega_repump <= gamma0),
        zero_repump=bool(zero),
    )


def rb87_d1_enhancement(delta, delta_hfs):
    """Two-path Raman amplitude over the direct path alone for the 87Rb D1 scheme.

    Equals 1 + (1/12)/(1/4) * delta/(delta + delta_hfs); above 1 when both
    detunings share a sign.
    """
    w_direct = RB87_D1_CAVITY_WEIGHTS[0] * RB87_D1_CONTROL_WEIGHTS[0]
    w_second = RB87_D1_CAVITY_WEIGHTS[1] * RB87_D1_CONTROL_WEIGHTS[1]
    total = raman_rate_total(w_direct, w_second, 1.0, 1.0, delta, delta_hfs)
    return total / (w_direct / delta)
