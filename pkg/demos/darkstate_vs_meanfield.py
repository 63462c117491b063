"""
Exact dark state against the linearized moments
================================================

For cavity pumping alone the steady state is the dark state of
J = sin(theta) S+ + cos(theta) S-. Here we scan the drive ratio r = tan(theta)
and compare its phase sensitivity with the linearized estimate.
"""

import numpy as np

from dissqueeze.darkstate import heisenberg_limit, sql_limit
from dissqueeze.optimize import darkstate_sweep

ratios = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99, 0.999]
table = darkstate_sweep([10, 100], ratios)

for n in (10, 100):
    print(f"N = {n}:  SQL {sql_limit(n):.5f}   Heisenberg {heisenberg_limit(n):.5f}")
    print("   r        exact      linearized   rel. diff")
    for row in table.rows:
        if row["N"] != n:
            continue
        exact, mf = row["dphi_exact"], row["dphi_mf"]
        diff = abs(mf - exact) / exact if np.isfinite(mf) else np.inf
        print(f"  {row['ratio']:<6}  {exact:.6f}   {mf:10.6f}   {diff:8.3f}")
    print()

# The two agree closely until r is within a few times 1/N of one; the
# linearization then fails while the exact value saturates at the
# Heisenberg bound.
