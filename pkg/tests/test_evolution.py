import csv

import numpy as np
import pytest

from biotpicard import evolution
from biotpicard.errors import SolverBreakdown
from biotpicard.evolution import (LEDGER_COLUMNS, assemble_sources, energy_audit_linear, solve_linear_trajectory,
                                  step_linear, translate_problem)
from biotpicard.permeability import PermeabilityLaw
from biotpicard.scenario import Scenario

UNIT = PermeabilityLaw.constant(1.0)


def smooth_S(x, t):
    return np.sin(np.pi * x[:, 0]) * (1 + t) * (1 + x[:, -1])


def scenario(dimension=1, n=8, dt=0.125, c0=1.0, law=UNIT, **kw):
    return Scenario(dimension, n, 1.0, dt, c0, law, **kw)


def run_linear(ops, sc, z_cells=None, **kw):
    loads = assemble_sources(ops, sc)
    tp = translate_problem(ops, sc, loads)
    if z_cells is None:
        z_cells = np.zeros((sc.n_steps + 1, ops.mesh.n_cells))
    return solve_linear_trajectory(ops, tp, z_cells, sc, **kw)


def test_zero_step(ops_cache):
    ops = ops_cache(1, 4)
    p = step_linear(ops, np.zeros(5), np.zeros(4), None, 1.0, 0.1, UNIT)
    assert np.array_equal(p, np.zeros(5))


def test_heat_equation_step_against_hand_matrices(ops_cache):
    # B switched off: (M/dt + K) p = M p_prev/dt + b with tridiagonal M, K on a uniform grid
    ops = ops_cache(1, 4)
    h, dt = 0.25, 0.1
    tri = lambda a, b: np.diag([a] * 3) + np.diag([b] * 2, 1) + np.diag([b] * 2, -1)
    m = tri(4 * h / 6, h / 6)
    k = tri(2 / h, -1 / h)
    p_prev = np.array([0.0, 1.0, -2.0, 0.5, 0.0])
    b = np.full(3, h)  # S = 1 with the midpoint rule
    expected = np.linalg.solve(m / dt + k, m @ p_prev[1:4] / dt + b)
    p = step_linear(ops, p_prev, np.zeros(4), 1.0, 1.0, dt, UNIT, include_B=False)
    assert np.allclose(p[1:4], expected, rtol=0, atol=1e-13)


def test_steady_forcing_reaches_stationary_solution(ops_cache):
    ops = ops_cache(1, 6)
    law = PermeabilityLaw.constant(2.0)
    load = ops.scalar_load(lambda x: np.sin(np.pi * x[:, 0]))
    p = np.zeros(ops.scalar.n_dofs)
    for _ in range(200):
        p = step_linear(ops, p, np.zeros(ops.mesh.n_cells), load, 1.0, 1.0, law)
    stationary = np.linalg.solve(2.0 * ops.K.toarray(), load)
    assert np.allclose(ops.scalar.restrict(p), stationary, atol=1e-10)


def test_translation_identity_without_force(ops_cache):
    ops = ops_cache(2, 3)
    sc = scenario(2, 3, 0.25, S=smooth_S, d0=lambda x: x[:, 0])
    loads = assemble_sources(ops, sc)
    tp = translate_problem(ops, sc, loads)
    assert np.array_equal(tp.u_F, np.zeros_like(tp.u_F))
    assert np.array_equal(tp.S_tilde, loads.S)
    assert np.array_equal(tp.content0_tilde, loads.content0)
    assert np.array_equal(tp.shift, np.zeros_like(tp.shift))


def test_translation_time_constant_force(ops_cache):
    ops = ops_cache(2, 3)
    g = lambda x, t: np.column_stack([x[:, 1], -x[:, 0]])
    sc = scenario(2, 3, 0.25, S=smooth_S, F=g)
    loads = assemble_sources(ops, sc)
    tp = translate_problem(ops, sc, loads)
    assert np.max(np.abs(tp.div_u_F_t)) == 0.0
    assert np.array_equal(tp.S_tilde, loads.S)
    assert np.allclose(tp.content0_tilde, loads.content0 - ops.G @ ops.vector.restrict(tp.u_F[0]))


def test_translation_linear_in_time_force(ops_cache):
    ops = ops_cache(2, 3)
    g = lambda x: np.column_stack([np.sin(np.pi * x[:, 1]), x[:, 0] ** 2])
    sc = scenario(2, 3, 0.25, F=lambda x, t: t * g(x))
    tp = translate_problem(ops, sc)
    lift = np.linalg.solve(ops.Ke.toarray(), ops.vector_load(lambda x, t: g(x), 0.0))
    for n in range(1, sc.n_steps + 1):
        assert np.allclose(tp.div_u_F_t[n], ops.G @ lift, atol=1e-13)
    # analytic derivative gives the same answer
    tp2 = translate_problem(ops, sc.with_(F_t=lambda x, t: g(x)))
    assert np.allclose(tp2.div_u_F_t[1:], tp.div_u_F_t[1:], atol=1e-13)


def test_zero_data_zero_trajectory(ops_cache):
    ops = ops_cache(2, 3)
    record = run_linear(ops, scenario(2, 3, 0.25))
    assert np.all(record.p == 0) and np.all(record.u == 0) and np.all(record.zeta == 0)


def test_incompressible_initial_pressure_is_undefined(ops_cache):
    ops = ops_cache(1, 8)
    record = run_linear(ops, scenario(c0=0.0, S=smooth_S))
    assert np.all(np.isnan(record.p[0])) and np.all(np.isfinite(record.p[1:]))


def test_constant_law_self_consistent(ops_cache):
    ops = ops_cache(1, 8)
    sc = scenario(S=smooth_S, d0=lambda x: np.sin(np.pi * x[:, 0]),
                  F=lambda x, t: np.column_stack([t * x[:, 0]]))
    first = run_linear(ops, sc)
    tp = first.translated
    second = solve_linear_trajectory(ops, tp, first.zeta_cells - tp.shift, sc)
    assert np.allclose(second.p[1:], first.p[1:], rtol=0, atol=1e-13)


def test_record_satisfies_elasticity_and_content(ops_cache):
    ops = ops_cache(2, 4)
    F = lambda x, t: np.column_stack([t * x[:, 1], np.sin(np.pi * x[:, 0])])
    sc = scenario(2, 4, 0.25, S=smooth_S, F=F, d0=lambda x: x[:, 0] * x[:, 1])
    loads = assemble_sources(ops, sc)
    record = run_linear(ops, sc)
    for n in range(sc.n_steps + 1):
        u = ops.vector.restrict(record.u[n])
        p = ops.scalar.restrict(record.p[n])
        assert np.allclose(ops.Ke @ u, ops.G.T @ p + loads.F[n], atol=1e-11)
    # the content functional of step 0 is the datum itself
    assert np.allclose(record.content[0], loads.content0)


def test_lagged_mode_tagged(ops_cache):
    ops = ops_cache(1, 8)
    law = PermeabilityLaw.clamped_exponential(0.5, 2.0, 1.0, 1.0)
    sc = scenario(S=smooth_S, law=law)
    record = run_linear(ops, sc, lagged=True)
    assert record.mode == "lagged-k"


def test_solver_breakdown_reported():
    with pytest.raises(SolverBreakdown):
        evolution._checked_cholesky_solve(-np.eye(2), np.ones(2), 1e-10)


def test_energy_audit_zero_data(ops_cache):
    ops = ops_cache(1, 8)
    report = energy_audit_linear(ops, run_linear(ops, scenario()))
    assert report.passed and np.all(report.lhs == 0) and np.all(report.rhs == 0)


@pytest.mark.parametrize("dt", [0.125, 0.0625])
def test_energy_audit_strict_slack(ops_cache, dt):
    ops = ops_cache(1, 8)
    report = energy_audit_linear(ops, run_linear(ops, scenario(dt=dt, S=smooth_S)))
    assert report.passed
    assert np.all(report.slack[1:] > 0)
    assert np.isfinite(report.preest2_constant) and np.isfinite(report.preest3_constant)


def test_energy_audit_left_side_changes_by_order_dt(ops_cache):
    ops = ops_cache(1, 8)
    coarse = energy_audit_linear(ops, run_linear(ops, scenario(dt=0.125, S=smooth_S)))
    fine = energy_audit_linear(ops, run_linear(ops, scenario(dt=0.0625, S=smooth_S)))
    gap = abs(coarse.lhs[-1] - fine.lhs[-1]) / fine.lhs[-1]
    assert gap < 0.25


def test_ledger_and_outputs(ops_cache, tmp_path):
    ops = ops_cache(2, 3)
    record = run_linear(ops, scenario(2, 3, 0.25, S=smooth_S, d0=lambda x: x[:, 0]))
    assert set(record.ledger) == set(LEDGER_COLUMNS)
    evolution.write_trajectory_csv(record, tmp_path / "traj.csv")
    with open(tmp_path / "traj.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == LEDGER_COLUMNS
    assert len(rows) == 6
    assert float(rows[2][1]) == record.ledger["L2_p"][1]
    evolution.write_snapshot(ops, record, 2, tmp_path / "snap.txt")
    lines = (tmp_path / "snap.txt").read_text().splitlines()
    assert lines[0] == f"0.5 {ops.mesh.n_vertices} 4"
    assert len(lines) == ops.mesh.n_vertices + 1
    vals = np.array(lines[6].split(), dtype=float)
    assert vals[0] == record.p[2][5] and vals[-1] == record.zeta[2][5]
