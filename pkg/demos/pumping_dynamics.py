"""
Pumping into the steady state
=============================

Master-equation runs for a small ensemble. Cavity decay alone conserves the
total spin, so where the system ends up depends on where it starts. With
single-atom scattering added the steady state is unique.

Usage: python demos/pumping_dynamics.py [N]   (default 6; N = 10 takes minutes)
"""

import math
import sys
import warnings

from dissqueeze.darkstate import dark_state_dphi
from dissqueeze.lindblad import ChannelSet, evolve, polarized_state, random_state

n = int(sys.argv[1]) if len(sys.argv) > 1 else 6
ratio = 0.2
theta = math.atan(ratio)
warnings.simplefilter("ignore", RuntimeWarning)


def show(label, traj):
    print(f"{label}: converged={traj.converged} at t={traj.times[-1]:.2f}")
    step = max(1, len(traj.times) // 8)
    for t, m in zip(traj.times[::step], traj.moments[::step]):
        print(f"   t={t:6.2f}  <Sz>={m.sz:+.4f}  <Sx^2>={m.sx2:.4f}  dphi={m.dphi:.5f}")
    print(f"   final dphi {traj.steady.dphi:.6f}")


print(f"dark-state dphi for N={n}, r={ratio}: {dark_state_dphi(n, ratio):.6f}\n")

# cavity only, from the fully polarized state: lands on the dark state
cavity = ChannelSet(n, theta)
show("cavity only, polarized start", evolve(polarized_state(n), cavity, t_max=30))

# cavity only, random pure start: other total-spin sectors keep their weight
cavity_full = ChannelSet(n, theta, basis="full")
show("cavity only, random start", evolve(random_state(n, seed=7), cavity_full, t_max=30))

# chi = 1: both starts flow to the same state
mixed = ChannelSet.from_chi(n, theta, 1.0)
a = evolve(polarized_state(n, "full"), mixed, t_max=30)
b = evolve(random_state(n, seed=7), mixed, t_max=30)
show("chi = 1, polarized start", a)
show("chi = 1, random start", b)
print(f"\ndifference in final dphi: {abs(a.steady.dphi - b.steady.dphi):.2e}")
