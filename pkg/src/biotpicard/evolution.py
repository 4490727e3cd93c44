"""Implicit Euler for the frozen-permeability linear problem.

The pressure equation is stepped in the reduced form

    (c0 M + M B) (p^n - p^{n-1}) / dt + A(z^n) p^n = S^n

where only the fluid-content functional ``y^{n-1} = (zeta^{n-1}, q)``
enters the right-hand side.  The stepper therefore starts from
``y^0 = (d0, q)`` and never needs ``p^0``; when ``c0 > 0`` the initial
pressure ``(c0 I + B)^{-1} d0`` is still reported.

The body force is removed first by the elastic lift ``u_F = Ke^{-1} F``:
the source becomes ``S - div u_{F,t}``, the datum ``d0 - div u_F(0)`` and
the permeability argument is shifted by ``div u_F``.  A monolithic
two-field stepper in the original variables is kept alongside as an
independent route.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import assembly
from .errors import SolverBreakdown
from .mesh import format_float

log = logging.getLogger(__name__)

LEDGER_COLUMNS = ("t", "L2_p", "V_p", "sqrtB_p_sq", "L2_zeta", "H1_zeta", "Vprime_dzeta", "Linf_grad_p")


@dataclass(frozen=True, eq=False)
class SourceLoads:
    """Discrete data of a scenario, one row per time node.

    ``S`` and ``F`` are load vectors on free dofs; ``F_t`` is the analytic
    or backward-difference time derivative of the ``F`` loads (row 0 is
    zero for differences).  ``content0`` is ``(d0, q)`` on free pressure
    test functions.
    """

    times: np.ndarray
    S: np.ndarray
    F: np.ndarray
    F_t: np.ndarray
    content0: np.ndarray
    d0_cells: np.ndarray
    d0_nodal: np.ndarray
    d0_l2_sq: float
    F_t_kind: str


@dataclass(frozen=True, eq=False)
class TranslatedProblem:
    """The equivalent problem with zero body force.

    ``shift[n]`` is the per-cell ``div u_F(t_n)`` by which the argument of
    the permeability law is translated.
    """

    u_F: np.ndarray
    div_u_F_t: np.ndarray
    S_tilde: np.ndarray
    content0_tilde: np.ndarray
    shift: np.ndarray
    law: object
    loads: SourceLoads

    def permeability(self, z_cells, n):
        """The translated law ``k_F`` evaluated at step ``n``."""
        return self.law(np.asarray(z_cells) + self.shift[n])


@dataclass(eq=False)
class TrajectoryRecord:
    """Solution trajectory in the original variables plus its energy ledger.

    Arrays have one row per time node.  For ``c0 == 0`` the initial
    pressure and displacement are undefined and stored as NaN.
    """

    times: np.ndarray
    p: np.ndarray
    u: np.ndarray
    zeta: np.ndarray
    zeta_cells: np.ndarray
    content: np.ndarray
    z_used: np.ndarray
    c0: float
    mode: str = "global"
    ledger: dict = field(default_factory=dict)
    data_functional: float = 0.0
    d0_l2_sq: float = 0.0
    translated: TranslatedProblem = None

    @property
    def n_steps(self):
        return self.times.size - 1


def assemble_sources(ops, sc):
    """Evaluate all scenario data on the time grid."""
    mesh = ops.mesh
    times = sc.times
    ns, nv = ops.scalar.n_interior, ops.vector.n_interior
    S = np.zeros((times.size, ns))
    F = np.zeros((times.size, nv))
    F_t = np.zeros((times.size, nv))
    for n, t in enumerate(times):
        if sc.S is not None:
            S[n] = ops.scalar_load(sc.S, t)
        if sc.F is not None:
            F[n] = ops.vector_load(sc.F, t)
        if sc.F_t is not None:
            F_t[n] = ops.vector_load(sc.F_t, t)
    if sc.F_t is None:
        F_t[1:] = np.diff(F, axis=0) / sc.dt
        kind = "difference"
    else:
        kind = "analytic"

    mids = mesh.midpoints()
    if sc.d0 is None:
        d0_cells = np.zeros(mesh.n_cells)
        content0 = np.zeros(ns)
        d0_nodal = np.zeros(ops.scalar.n_dofs)
    else:
        d0_cells = np.asarray(sc.d0(mids), dtype=float)
        full = assembly.assemble_load(mesh, sc.d0, ops.scalar, zero_dirichlet=False)
        content0 = ops.scalar.restrict(full)
        d0_nodal = ops._m_full.solve(full)
    d0_l2_sq = float(np.sum(mesh.cell_measures() * d0_cells ** 2))
    return SourceLoads(times, S, F, F_t, content0, d0_cells, d0_nodal, d0_l2_sq, kind)


def translate_problem(ops, sc, loads=None):
    """Eliminate the body force by the elastic lift ``u_F = Ke^{-1} F``."""
    loads = assemble_sources(ops, sc) if loads is None else loads
    u_F = ops._solve_ke(loads.F.T).T if ops.vector.n_interior else loads.F.copy()
    if loads.F_t_kind == "analytic":
        u_F_t = ops._solve_ke(loads.F_t.T).T if ops.vector.n_interior else loads.F_t.copy()
    else:
        u_F_t = np.zeros_like(u_F)
        u_F_t[1:] = np.diff(u_F, axis=0) / sc.dt
    div_u_F_t = (ops.G @ u_F_t.T).T
    S_tilde = loads.S - div_u_F_t
    content0_tilde = loads.content0 - ops.G @ u_F[0]
    u_F_full = ops.vector.extend(u_F)
    shift = np.array([ops.cell_divergence(row) for row in u_F_full])
    return TranslatedProblem(u_F_full, div_u_F_t, S_tilde, content0_tilde, shift, sc.law, loads)


def _checked_cholesky_solve(a, b, linear_tol):
    try:
        factor = sla.cho_factor(a)
    except np.linalg.LinAlgError:
        raise SolverBreakdown("step matrix is not positive definite", np.linalg.cond(a)) from None
    x = sla.cho_solve(factor, b)
    nb = np.linalg.norm(b)
    if nb > 0:
        res = np.linalg.norm(a @ x - b) / nb
        if not res <= linear_tol:
            raise SolverBreakdown(f"step residual {res:.3e} exceeds {linear_tol:.1e}", np.linalg.cond(a))
    return x


def _advance(ops, content_matrix, y_prev, weights, load, dt, linear_tol):
    """One implicit Euler step from the content functional ``y_prev``."""
    si = ops.scalar.interior_dofs
    a = content_matrix / dt + _weighted(ops, weights)[si][:, si].toarray()
    return _checked_cholesky_solve(a, y_prev / dt + load, linear_tol)


def _weighted(ops, weights):
    # stiffness with prescribed per-cell permeability values
    grads = ops.mesh.basis_gradients()
    local = np.einsum("kad,kbd->kab", grads, grads) * (weights * ops.mesh.cell_measures())[:, None, None]
    rows = np.repeat(ops.mesh.cells[:, :, None], grads.shape[1], axis=2)
    cols = np.repeat(ops.mesh.cells[:, None, :], grads.shape[1], axis=1)
    return assembly._scatter(rows, cols, local, (ops.mesh.n_vertices,) * 2)


def step_linear(ops, p_prev, z, S_now, c0, dt, law, *, include_B=True, linear_tol=1e-10):
    """Advance the pressure by one implicit Euler step.

    Solves ``[(c0 M + M B)/dt + A(z)] p = (c0 M + M B)/dt p_prev + S_now``.

    Parameters
    ----------
    p_prev : array_like
        Previous pressure (nodal, full or interior length).
    z : array_like
        Permeability argument, nodal (length n_vertices) or per cell.
    S_now : callable, array_like or None
        Pressure source: a function of the points, a load vector, or None.
    include_B : bool
        Test-harness switch; False drops the coupling and leaves the heat equation.
    """
    y_mat = c0 * ops.M.toarray()
    if include_B:
        y_mat = y_mat + ops.schur
    z = np.asarray(z, dtype=float)
    z_cells = z if z.shape == (ops.mesh.n_cells,) else assembly.cell_values(ops.mesh, z)
    y_prev = y_mat @ ops.interior_scalar(p_prev)
    load = ops.scalar_load(S_now)
    p = _advance(ops, y_mat, y_prev, law(z_cells), load, dt, linear_tol)
    return ops.scalar.extend(p)


def _initial_z(ops, loads, tp):
    # translated fluid content at t = 0, on cells
    return loads.d0_cells - tp.shift[0]


def solve_linear_trajectory(ops, tp, z_traj, sc, *, lagged=False, include_B=True):
    """March the translated linear problem for a given permeability argument.

    Parameters
    ----------
    tp : TranslatedProblem
    z_traj : ndarray, shape (n_steps + 1, n_cells), or None
        Permeability argument in the translated variable (row 0 unused).
        Ignored when ``lagged`` is set; then step ``n`` uses the fluid
        content of step ``n - 1``.
    """
    n_steps = sc.n_steps
    y_mat = sc.c0 * ops.M.toarray() + (ops.schur if include_B else 0.0)
    ns = ops.scalar.n_interior
    p = np.full((n_steps + 1, ns), np.nan)
    if sc.c0 > 0 and ns:
        p[0] = sla.cho_solve(sla.cho_factor(y_mat), tp.content0_tilde)
    y = tp.content0_tilde.copy()
    z_used = np.zeros((n_steps + 1, ops.mesh.n_cells))
    z_prev = _initial_z(ops, tp.loads, tp)
    for n in range(1, n_steps + 1):
        z_n = z_prev if lagged else z_traj[n]
        z_used[n] = z_n
        p[n] = _advance(ops, y_mat, y, tp.permeability(z_n, n), tp.S_tilde[n], sc.dt, sc.linear_tol)
        y = y_mat @ p[n]
        if lagged:
            w_n = ops.G.T @ p[n]
            div_w = ops.cell_divergence(ops.vector.extend(ops._solve_ke(w_n))) if include_B else 0.0
            z_prev = sc.c0 * assembly.cell_values(ops.mesh, ops.scalar.extend(p[n])) + div_w

    w = np.full((n_steps + 1, ops.vector.n_interior), np.nan)
    finite = np.all(np.isfinite(p), axis=1)
    if include_B and ops.vector.n_interior:
        w[finite] = ops._solve_ke((ops.G.T @ p[finite].T)).T
    else:
        w[finite] = 0.0
    u = w + ops.vector.restrict(tp.u_F)
    record = _make_record(ops, sc, tp.loads, p, u, z_used + tp.shift, "lagged-k" if lagged else "global")
    record.translated = tp
    fill_ledger(ops, record)
    return record


def solve_direct_trajectory(ops, sc, loads, z_traj, *, lagged=False):
    """Monolithic two-field implicit Euler in the original variables.

    Each step solves the saddle-point system::

        [ Ke        -G^T            ] [u]   [F^n                        ]
        [ G/dt   c0 M/dt + A(z^n)   ] [p] = [y^{n-1}/dt + S^n            ]

    ``z_traj`` is the permeability argument in the original variable.
    """
    n_steps = sc.n_steps
    ns, nv = ops.scalar.n_interior, ops.vector.n_interior
    si = ops.scalar.interior_dofs
    p = np.full((n_steps + 1, ns), np.nan)
    u = np.full((n_steps + 1, nv), np.nan)
    if sc.c0 > 0 and ns:
        p[0] = ops.solve_content(loads.content0 - ops.G @ ops._solve_ke(loads.F[0]), sc.c0)
        u[0] = ops._solve_ke(ops.G.T @ p[0] + loads.F[0])
    y = loads.content0.copy()
    z_used = np.zeros((n_steps + 1, ops.mesh.n_cells))
    z_prev = loads.d0_cells
    c0_mass = sc.c0 * ops.M
    for n in range(1, n_steps + 1):
        z_n = z_prev if lagged else z_traj[n]
        z_used[n] = z_n
        a_z = _weighted(ops, sc.law(z_n))[si][:, si]
        block = sps.bmat([[ops.Ke, -ops.G.T], [ops.G / sc.dt, c0_mass / sc.dt + a_z]], format="csc")
        rhs = np.concatenate([loads.F[n], y / sc.dt + loads.S[n]])
        sol = spla.splu(block).solve(rhs)
        nb = np.linalg.norm(rhs)
        if nb > 0:
            res = np.linalg.norm(block @ sol - rhs) / nb
            if not res <= sc.linear_tol:
                raise SolverBreakdown(f"monolithic step residual {res:.3e}")
        u[n], p[n] = sol[:nv], sol[nv:]
        y = sc.c0 * (ops.M @ p[n]) + ops.G @ u[n]
        if lagged:
            z_prev = (sc.c0 * assembly.cell_values(ops.mesh, ops.scalar.extend(p[n]))
                      + ops.cell_divergence(ops.vector.extend(u[n])))
    record = _make_record(ops, sc, loads, p, u, z_used, "lagged-k" if lagged else "global")
    fill_ledger(ops, record)
    return record


def _make_record(ops, sc, loads, p_int, u_int, z_used, mode):
    mesh = ops.mesh
    p = ops.scalar.extend(p_int)
    u = ops.vector.extend(u_int)
    p[~np.isfinite(p_int).all(axis=1)] = np.nan
    u[~np.isfinite(u_int).all(axis=1)] = np.nan
    n_nodes = p.shape[0]
    zeta = np.empty_like(p)
    zeta_cells = np.empty((n_nodes, mesh.n_cells))
    content = np.empty((n_nodes, ops.scalar.n_interior))
    for n in range(n_nodes):
        if np.all(np.isfinite(p[n])) and np.all(np.isfinite(u[n])):
            zeta[n] = sc.c0 * p[n] + ops.dilation_from_displacement(u[n])
            zeta_cells[n] = sc.c0 * assembly.cell_values(mesh, p[n]) + ops.cell_divergence(u[n])
            content[n] = sc.c0 * (ops.M @ p_int[n]) + ops.G @ u_int[n]
        else:
            zeta[n] = loads.d0_nodal
            zeta_cells[n] = loads.d0_cells
            content[n] = loads.content0
    if n_nodes:
        content[0] = loads.content0
    data = discrete_data_functional(ops, loads, sc.dt)
    return TrajectoryRecord(
        times=loads.times.copy(), p=p, u=u, zeta=zeta, zeta_cells=zeta_cells, content=content,
        z_used=z_used, c0=sc.c0, mode=mode, data_functional=data, d0_l2_sq=loads.d0_l2_sq,
    )


def discrete_data_functional(ops, loads, dt):
    """``dt * sum_n (|S^n|_{V'}^2 + |F_t^n|_{V'}^2 + |F^n|_{V'}^2)`` over n >= 1."""
    total = 0.0
    for n in range(1, loads.times.size):
        total += (ops.dual_norm_Vprime(loads.S[n]) ** 2
                  + ops.dual_norm_vector(loads.F_t[n]) ** 2
                  + ops.dual_norm_vector(loads.F[n]) ** 2)
    return dt * total


def fill_ledger(ops, record):
    """Per-step norms written to the trajectory CSV."""
    n_nodes = record.times.size
    ledger = {name: np.full(n_nodes, np.nan) for name in LEDGER_COLUMNS}
    ledger["t"] = record.times.copy()
    dt = record.times[1] - record.times[0] if n_nodes > 1 else 1.0
    schur = ops.schur
    for n in range(n_nodes):
        p = record.p[n]
        if np.all(np.isfinite(p)):
            pi = ops.scalar.restrict(p)
            ledger["L2_p"][n] = ops.l2_norm(p)
            ledger["V_p"][n] = ops.v_norm(p)
            ledger["sqrtB_p_sq"][n] = float(pi @ (schur @ pi))
            ledger["Linf_grad_p"][n] = ops.grad_linf(p)
        ledger["L2_zeta"][n] = ops.l2_norm(record.zeta[n])
        ledger["H1_zeta"][n] = ops.h1_norm(record.zeta[n])
        if n > 0:
            ledger["Vprime_dzeta"][n] = ops.dual_norm_Vprime((record.content[n] - record.content[n - 1]) / dt)
    record.ledger = ledger
    return ledger


def write_trajectory_csv(record, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for n in range(record.times.size):
            writer.writerow([format_float(record.ledger[c][n]) for c in LEDGER_COLUMNS])


def write_snapshot(ops, record, step, path):
    """Nodal snapshot aligned with the mesh dump: ``p u_1 .. u_d zeta`` per vertex."""
    d = ops.mesh.dimension
    u = record.u[step].reshape(ops.mesh.n_vertices, d)
    with open(path, "w") as fh:
        fh.write(f"{format_float(record.times[step])} {ops.mesh.n_vertices} {d + 2}\n")
        for v in range(ops.mesh.n_vertices):
            vals = [record.p[step][v], *u[v], record.zeta[step][v]]
            fh.write(" ".join(format_float(x) for x in vals) + "\n")


@dataclass
class AuditReport:
    """Outcome of the discrete energy-inequality audit."""

    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray
    max_violation: float
    initial_energy: float
    preest2_constant: float
    preest3_constant: float
    preest3_stepwise: float
    applicable: bool = True
    tolerance: float = 1e-8

    @property
    def passed(self):
        return (not self.applicable) or self.max_violation <= self.tolerance


def _content_energy(y_mat, y):
    """``y^T Y^+ y`` with a range check; inf if ``y`` is not in the range of ``Y``."""
    if not np.any(y):
        return 0.0
    evals, evecs = np.linalg.eigh(y_mat)
    cut = 1e-12 * max(evals.max(), 1e-300)
    keep = evals > cut
    coeff = evecs.T @ y
    if np.linalg.norm(coeff[~keep]) > 1e-8 * np.linalg.norm(y):
        return np.inf
    return float(np.sum(coeff[keep] ** 2 / evals[keep]))


def energy_audit_linear(ops, record, law=None, tolerance=1e-8):
    """Check the discrete energy inequality step by step.

    With ``E^n = c0 |p^n|^2 + |B^{1/2} p^n|^2`` (translated variables) the
    implicit Euler step satisfies

        E^n + k1 dt sum_{j<=n} |p^j|_V^2 <= E^0 + (dt / k1) sum_{j<=n} |S~^j|_{V'}^2.

    Also reports the constants of the dual estimate for the content
    derivative and of the H1 bound on the translated fluid content.
    """
    tp = record.translated
    if tp is None:
        raise ValueError("energy audit needs a trajectory from solve_linear_trajectory")
    law = tp.law if law is None else law
    k1 = law.k1
    c0 = record.c0
    dt = record.times[1] - record.times[0]
    y_mat = c0 * ops.M.toarray() + ops.schur
    e0 = _content_energy(y_mat, tp.content0_tilde)

    n_nodes = record.times.size
    lhs = np.zeros(n_nodes)
    rhs = np.zeros(n_nodes)
    lhs[0] = e0 if np.isfinite(e0) else 0.0
    rhs[0] = e0
    acc_v = 0.0
    acc_s = 0.0
    y_prev = tp.content0_tilde
    dual_sq = 0.0
    zeta_h1_sq = 0.0
    ratio_max = 0.0
    p_v_sq_total = 0.0
    s_sq_total = 0.0
    for n in range(1, n_nodes):
        pi = ops.scalar.restrict(record.p[n])
        y_n = y_mat @ pi
        v_sq = ops.v_norm(record.p[n]) ** 2
        s_sq = ops.dual_norm_Vprime(tp.S_tilde[n]) ** 2
        acc_v += v_sq
        acc_s += s_sq
        lhs[n] = float(pi @ y_n) + k1 * dt * acc_v
        rhs[n] = e0 + dt / k1 * acc_s
        dual_sq += ops.dual_norm_Vprime((y_n - y_prev) / dt) ** 2
        y_prev = y_n
        zeta_w = c0 * record.p[n] + ops.apply_B(record.p[n])
        h1 = ops.h1_norm(zeta_w)
        zeta_h1_sq += h1 ** 2
        if v_sq > 0:
            ratio_max = max(ratio_max, h1 / np.sqrt(v_sq))
        p_v_sq_total += v_sq
        s_sq_total += s_sq

    slack = rhs - lhs
    applicable = bool(np.isfinite(e0))
    scale = max(np.max(np.abs(rhs[np.isfinite(rhs)]), initial=0.0), 1e-300)
    violation = float(np.max(np.maximum(-slack[1:], 0.0), initial=0.0) / scale) if applicable else 0.0
    p_l2v = np.sqrt(dt * p_v_sq_total)
    s_l2vp = np.sqrt(dt * s_sq_total)
    denom2 = p_l2v + s_l2vp
    c2 = np.sqrt(dt * dual_sq) / denom2 if denom2 > 0 else 0.0
    c3 = np.sqrt(dt * zeta_h1_sq) / p_l2v if p_l2v > 0 else 0.0
    return AuditReport(lhs, rhs, slack, violation, e0, float(c2), float(c3), float(ratio_max),
                       applicable, tolerance)
