"""
From laboratory numbers to model rates
======================================

Uses the shipped 87Rb D1 parameter set (angular frequencies in rad/s).
"""

import math
import warnings

from dissqueeze.cli import load_config_file
from dissqueeze.params import (
    CavityAtomParams,
    derive_rates,
    rb87_d1_enhancement,
    repump_populations,
)

cfg = load_config_file("rb87")
p = CavityAtomParams.from_dict(cfg["params"])

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    rates = derive_rates(p)

print(f"gamma_cav   = {rates.gamma_cav:.4e} rad/s")
print(f"gamma_spont = {rates.gamma_spont:.4e} rad/s")
print(f"chi         = {rates.chi:.4f}")
print(f"theta       = {rates.theta:.4f} rad (drive ratio {rates.ratio:.3f})")
for w in caught:
    print(f"warning: {w.message}")

# The second excited hyperfine level adds a Raman path; with both detunings of
# the same sign the paths add up.
delta, hfs = cfg["raman"]["delta"], cfg["raman"]["delta_hfs"]
print(f"\ntwo-path enhancement at delta/2pi = {delta / (2 * math.pi) / 1e9:.2f} GHz: "
      f"{rb87_d1_enhancement(delta, hfs):.3f}")
print(f"                     at delta/2pi = +1.00 GHz: "
      f"{rb87_d1_enhancement(2 * math.pi * 1e9, hfs):.3f}")

rep = repump_populations(**cfg["repump"])
print(f"\nleak rates out of the spin system: {rep.gamma_out_plus:.3e}, {rep.gamma_out_minus:.3e} rad/s")
print(f"repump rate {rep.gamma_repump:.3e} rad/s; population outside {rep.external_fraction:.2e}")
