"""
Best achievable squeezing versus cooperativity
==============================================

At each cooperativity chi the mixing angle is tuned to minimize the linearized
steady-state dphi. Weak and strong coupling each have a simple closed form.
"""

import numpy as np

from dissqueeze.optimize import fig4_chis, fitted_exponent, sweep

n = 10**6
result = sweep([n], fig4_chis(1e-7, 1e3, 21))

print(f"N = {n}")
print("    chi       N chi     theta_opt   dphi/SQL   weak form  strong form")
sql = 1 / np.sqrt(n)
for row in result.rows:
    # each closed form only where it applies
    weak = f"{row['asym_small'] / sql:9.5f}" if row["Nchi"] <= 1 else " " * 9
    strong = f"{row['asym_large'] / sql:9.5f}" if row["Nchi"] >= 10 else ""
    print(f"  {row['chi']:8.1e}  {row['Nchi']:8.1e}  {row['theta_opt']:9.6f}  "
          f"{row['dphi_over_sql']:9.5f}  {weak}  {strong}")

# A single-atom cooperativity of 0.1 already gives more than a tenfold
# improvement over the standard quantum limit at this N.
best = next(r for r in result.rows if np.isclose(r["chi"], 0.1))
print(f"\nchi = 0.1: dphi/SQL = {best['dphi_over_sql']:.4f}")

# At fixed chi, dphi falls as a power of N.
print(f"fitted exponent at chi = 1, N = 1e4..1e8: {fitted_exponent(np.geomspace(1e4, 1e8, 9), 1.0):.4f}")
