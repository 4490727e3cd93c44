"""Linear problem for a frozen permeability argument, and its energy audit."""

import numpy as np

from biotpicard import PermeabilityLaw, Scenario, energy_audit_linear, solve_linear_trajectory, translate_problem
from biotpicard.fixedpoint import operators_for

sc = Scenario(
    dimension=1, n=32, T=1.0, dt=1 / 32, c0=0.5,
    law=PermeabilityLaw.constant(1.0),
    S=lambda x, t: np.sin(np.pi * x[:, 0]) * (1 + t),
    F=lambda x, t: np.column_stack([t * np.cos(np.pi * x[:, 0])]),
    d0=lambda x: x[:, 0] * (1 - x[:, 0]),
)
ops = operators_for(sc)

# the body force is removed by an elastic lift before time stepping
tp = translate_problem(ops, sc)
print("largest shift of the permeability argument:", np.abs(tp.shift).max())

z = np.zeros((sc.n_steps + 1, ops.mesh.n_cells))  # ignored by a constant law
record = solve_linear_trajectory(ops, tp, z, sc)
print("final |p|_L2:", record.ledger["L2_p"][-1])
print("final |zeta|_H1:", record.ledger["H1_zeta"][-1])

audit = energy_audit_linear(ops, record)
print("energy inequality holds:", audit.passed, " smallest slack:", audit.slack[1:].min())
print("dual-rate constant:", audit.preest2_constant, " content H1 constant:", audit.preest3_constant)
