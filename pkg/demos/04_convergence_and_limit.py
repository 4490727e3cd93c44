"""Manufactured-solution rates and the c0 -> 0 ladder."""

import numpy as np

from biotpicard import PermeabilityLaw, Scenario
from biotpicard.diagnostics import default_mms_case, incompressible_limit, mms_convergence, temporal_mms_case

law = PermeabilityLaw.clamped_exponential(0.5, 2.0, 1.0, 1.0)

# space: dt = 2 h^2 keeps the time error at the same order as the space error
spatial, _ = mms_convergence(default_mms_case(2, 1.0, law), (4, 8, 16), 2.0)
for row in spatial.rows:
    print(row["n"], row["dt"], row["err_p"])
print("spatial orders:", spatial.orders_p)

# time: fine fixed 1D mesh and an oscillating time factor
_, temporal = mms_convergence(temporal_mms_case(1.0, law), (), temporal_n=64, dt_ladder=[1 / 16, 1 / 32, 1 / 64])
print("temporal orders:", temporal.orders_p)

# incompressible limit; the first row is the c0 = 0 run itself
sc = Scenario(1, 32, 1.0, 1 / 16, 0.0, law, S=lambda x, t: 4 * np.sin(np.pi * x[:, 0]))
report = incompressible_limit(sc, (1e-1, 1e-2, 1e-3, 1e-4))
for row in report.rows:
    print(f"c0={row['c0']:.0e}  |c0 p|={row['c0p_norm']:.3e}  |p - p0|={row['gap_p']:.3e}")
print("monotone:", report.c0p_decreasing, report.gap_decreasing)
