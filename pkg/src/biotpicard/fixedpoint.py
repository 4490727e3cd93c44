"""Picard iteration of the map from permeability argument to fluid content.

One sweep solves the whole linear trajectory for a frozen argument ``z``
and returns the fluid content ``zeta(z)``; the next argument is
``(1 - theta) z + theta zeta(z)``.  Arguments are stored at cell
midpoints, which is where the permeability law is sampled.
"""

import csv
import logging
import time
from dataclasses import dataclass

import numpy as np

from . import assembly
from .errors import ConfigurationError, PicardNonConvergence
from .evolution import assemble_sources, solve_direct_trajectory, solve_linear_trajectory, translate_problem
from .mesh import build_unit_mesh, format_float
from .operators import BiotOperators

log = logging.getLogger(__name__)


@dataclass
class PicardState:
    index: int
    z_traj: np.ndarray
    zeta_traj: np.ndarray
    residual: float
    zeta_norm: float
    theta: float
    energy_bound_C: float = float("nan")
    wallclock_s: float = 0.0


def space_time_l2(mesh, cells_traj, dt):
    """``sqrt(dt sum_{n>=1} sum_K |K| f_K^2)`` for per-cell trajectories."""
    meas = mesh.cell_measures()
    return float(np.sqrt(dt * np.sum(meas * np.asarray(cells_traj)[1:] ** 2)))


def operators_for(sc):
    return BiotOperators(build_unit_mesh(sc.dimension, sc.n))


def energy_bound_constant(ops, record):
    """Ratio of ``c0 max|p|^2 + |p|_{L2(V)}^2`` to ``|d0|^2 + DATA``."""
    dt = record.times[1] - record.times[0]
    p = record.p[1:]
    l2 = np.array([ops.l2_norm(row) for row in p])
    v = np.array([ops.v_norm(row) for row in p])
    num = record.c0 * np.max(l2 ** 2, initial=0.0) + dt * np.sum(v ** 2)
    den = record.d0_l2_sq + record.data_functional
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return float(num / den)


def picard_solve(sc, ops=None, *, formulation="reduced", initial_guess=None, lagged=None):
    """Fixed point of the permeability-to-content map.

    Parameters
    ----------
    sc : Scenario
    ops : BiotOperators, optional
        Reused when given; must match ``sc.dimension`` and ``sc.n``.
    formulation : {"reduced", "direct"}
        ``reduced`` steps the body-force-free translated problem through
        ``c0 I + B``; ``direct`` uses the monolithic two-field stepper.
    initial_guess : {"d0", "zero"} or ndarray, optional
        Overrides ``sc.initial_guess``.  An array is a per-cell trajectory
        in the original variable.
    lagged : bool, optional
        Overrides ``sc.lagged_k``.  The lagged mode takes the permeability
        argument of step ``n`` from step ``n - 1`` in a single sweep; it is
        a preview and is tagged ``lagged-k`` in the record.

    Returns
    -------
    record : TrajectoryRecord
    history : list of PicardState

    Raises
    ------
    PicardNonConvergence
        If ``sc.max_iters`` sweeps do not reach the tolerance.
    """
    if formulation not in ("reduced", "direct"):
        raise ConfigurationError(f"unknown formulation {formulation!r}")
    ops = operators_for(sc) if ops is None else ops
    mesh = ops.mesh
    loads = assemble_sources(ops, sc)
    tp = translate_problem(ops, sc, loads) if formulation == "reduced" else None
    lagged = sc.lagged_k if lagged is None else lagged

    def sweep(z_orig):
        if formulation == "reduced":
            return solve_linear_trajectory(ops, tp, None if z_orig is None else z_orig - tp.shift, sc,
                                           lagged=lagged)
        return solve_direct_trajectory(ops, sc, loads, z_orig, lagged=lagged)

    if lagged:
        start = time.perf_counter()
        record = sweep(None)
        residual = space_time_l2(mesh, record.zeta_cells - record.z_used, sc.dt)
        state = PicardState(1, record.z_used, record.zeta_cells, residual,
                            space_time_l2(mesh, record.zeta_cells, sc.dt), 1.0,
                            energy_bound_constant(ops, record), time.perf_counter() - start)
        return record, [state]

    guess = sc.initial_guess if initial_guess is None else initial_guess
    shape = (sc.n_steps + 1, mesh.n_cells)
    if isinstance(guess, str):
        if guess == "d0":
            z = np.broadcast_to(loads.d0_cells, shape).copy()
        elif guess == "zero":
            z = np.zeros(shape)
        else:
            raise ConfigurationError(f"unknown initial guess {guess!r}")
    else:
        z = np.array(guess, dtype=float)
        if z.shape != shape:
            raise ConfigurationError(f"initial guess must have shape {shape}")

    history = []
    start = time.perf_counter()
    for m in range(1, sc.max_iters + 1):
        record = sweep(z)
        zeta = record.zeta_cells
        residual = space_time_l2(mesh, zeta - z, sc.dt)
        zeta_norm = space_time_l2(mesh, zeta, sc.dt)
        history.append(PicardState(m, z, zeta, residual, zeta_norm, sc.theta,
                                   energy_bound_constant(ops, record), time.perf_counter() - start))
        log.info("picard iter %d residual %.3e", m, residual)
        if residual <= sc.picard_tol * (1.0 + zeta_norm):
            return record, history
        z = (1.0 - sc.theta) * z + sc.theta * zeta
    raise PicardNonConvergence(
        f"Picard did not converge in {sc.max_iters} iterations "
        f"(last residual {history[-1].residual:.3e})", history)


def classify_history(history):
    """Label a residual history as converging, stagnating or oscillating."""
    r = np.array([s.residual for s in history])
    if r.size < 3:
        return "short"
    ratios = r[1:] / np.maximum(r[:-1], 1e-300)
    if np.all(ratios[-3:] < 0.95):
        return "converging"
    signs = np.sign(np.diff(r[-6:]))
    if np.any(signs[1:] != signs[:-1]):
        return "oscillating"
    return "stagnating"


def write_iteration_log(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "residual", "energy_bound_C", "wallclock_s"])
        for s in history:
            writer.writerow([s.index, format_float(s.residual), format_float(s.energy_bound_C),
                             format_float(s.wallclock_s)])


@dataclass
class FixedPointReport:
    pressure_residuals: np.ndarray
    elasticity_residuals: np.ndarray

    @property
    def max_pressure_residual(self):
        return float(np.max(self.pressure_residuals, initial=0.0))

    @property
    def max_elasticity_residual(self):
        return float(np.max(self.elasticity_residuals, initial=0.0))


def verify_fixed_point(ops, record, sc, loads=None):
    """A posteriori residuals of the nonlinear discrete equations.

    The pressure residual at step ``n`` is

        (zeta^n - zeta^{n-1}, q)/dt + (k(zeta^n) grad p^n, grad q) - <S^n, q>

    with ``zeta`` recomputed from the stored ``p`` and ``u`` (not from the
    Picard iterate), measured in ``V'``.  The elasticity residual
    ``e(u, w) - (p, div w) - (F, w)`` is measured in the dual of the
    energy norm.
    """
    loads = assemble_sources(ops, sc) if loads is None else loads
    si = ops.scalar.interior_dofs
    n_nodes = record.times.size
    pres = np.zeros(n_nodes)
    eres = np.zeros(n_nodes)
    y_prev = loads.content0
    for n in range(1, n_nodes):
        p = record.p[n]
        u = record.u[n]
        zeta_cells = sc.c0 * assembly.cell_values(ops.mesh, p) + ops.cell_divergence(u)
        y = sc.c0 * (ops.M @ ops.scalar.restrict(p)) + ops.G @ ops.vector.restrict(u)
        a = assembly.assemble_weighted_stiffness(ops.mesh, z_cells=zeta_cells, law=sc.law)[si][:, si]
        r = (y - y_prev) / sc.dt + a @ ops.scalar.restrict(p) - loads.S[n]
        pres[n] = ops.dual_norm_Vprime(r)
        e = ops.Ke @ ops.vector.restrict(u) - ops.G.T @ ops.scalar.restrict(p) - loads.F[n]
        eres[n] = ops.dual_norm_vector(e)
        y_prev = y
    return FixedPointReport(pres, eres)
