"""Verification drivers: manufactured solutions, the c0 -> 0 limit,
the uniqueness monitor and Darcy-velocity/total-stress postprocessing."""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import assembly
from .errors import ConfigurationError, PicardNonConvergence
from .fixedpoint import operators_for, picard_solve
from .mesh import format_float

log = logging.getLogger(__name__)

X, Y, T = sp.symbols("x y t", real=True)

# degree-5 rules on the reference simplex: barycentric points and weights summing to 1
_A1, _B1, _W1 = 0.059715871789770, 0.470142064105115, 0.132394152788506
_A2, _B2, _W2 = 0.797426985353087, 0.101286507323456, 0.125939180544827
TRIANGLE_RULE = (
    np.array([[1 / 3, 1 / 3, 1 / 3],
              [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
              [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2]]),
    np.array([0.225, _W1, _W1, _W1, _W2, _W2, _W2]),
)
_G = np.sqrt(3 / 5)
INTERVAL_RULE = (
    np.array([[(1 + _G) / 2, (1 - _G) / 2], [0.5, 0.5], [(1 - _G) / 2, (1 + _G) / 2]]),
    np.array([5 / 18, 8 / 18, 5 / 18]),
)


def quadrature_l2_error(mesh, nodal, exact, t=0.0, ncomp=1):
    """L2 norm of ``P1 field - exact(points, t)`` with a degree-5 rule.

    ``exact`` returns (n_points,) for scalars or (n_points, ncomp).
    """
    bary, weights = TRIANGLE_RULE if mesh.dimension == 2 else INTERVAL_RULE
    corners = mesh.vertices[mesh.cells]
    pts = np.einsum("qa,kad->kqd", bary, corners)
    vals = np.asarray(nodal, dtype=float).reshape(mesh.n_vertices, ncomp)[mesh.cells]
    approx = np.einsum("qa,kac->kqc", bary, vals)
    ex = np.asarray(exact(pts.reshape(-1, mesh.dimension), t), dtype=float)
    ex = ex.reshape(mesh.n_cells, len(weights), ncomp)
    err = np.sum((approx - ex) ** 2, axis=2)
    return float(np.sqrt(np.sum(mesh.cell_measures()[:, None] * weights * err)))


def _coords(dimension):
    return (X,) if dimension == 1 else (X, Y)


def _lambdify_scalar(expr, dimension, with_time=True):
    args = (*_coords(dimension), T)
    fn = sp.lambdify(args, expr, "numpy")

    def evaluate(points, t=0.0):
        points = np.atleast_2d(points)
        cols = [points[:, i] for i in range(dimension)]
        return np.broadcast_to(np.asarray(fn(*cols, t), dtype=float), (points.shape[0],)).copy()

    if with_time:
        return evaluate
    return lambda points: evaluate(points, 0.0)


def _lambdify_vector(exprs, dimension):
    comps = [_lambdify_scalar(e, dimension) for e in exprs]
    return lambda points, t=0.0: np.column_stack([c(points, t) for c in comps])


@dataclass(eq=False)
class MMSCase:
    """Manufactured solution with sources derived symbolically.

    ``p`` and ``u`` are sympy expressions in ``x`` (``y``) and ``t``; the
    body force, pressure source and initial fluid content follow from the
    balance laws with unit elastic and coupling coefficients.
    """

    dimension: int
    p: sp.Expr
    u: list
    c0: float
    law: object
    F: object = field(init=False)
    S: object = field(init=False)
    d0: object = field(init=False)
    p_exact: object = field(init=False)
    u_exact: object = field(init=False)

    def __post_init__(self):
        d = self.dimension
        xs = _coords(d)
        if len(self.u) != d:
            raise ConfigurationError(f"manufactured displacement needs {d} components")
        p, u = sp.sympify(self.p), [sp.sympify(c) for c in self.u]
        self._check_boundary(p, u)
        div_u = sum(sp.diff(u[i], xs[i]) for i in range(d))
        zeta = self.c0 * p + div_u
        # -div[2 eps(u) + div(u) I - p I] = -lap u - 2 grad div u + grad p
        force = [-sum(sp.diff(u[i], xj, 2) for xj in xs) - 2 * sp.diff(div_u, xs[i]) + sp.diff(p, xs[i])
                 for i in range(d)]
        k = self.law.symbolic(zeta)
        flux_div = sum(sp.diff(k * sp.diff(p, xj), xj) for xj in xs)
        source = sp.diff(zeta, T) - flux_div
        self.F = _lambdify_vector(force, d)
        self.S = _lambdify_scalar(source, d)
        self.d0 = _lambdify_scalar(zeta.subs(T, 0), d, with_time=False)
        self.p_exact = _lambdify_scalar(p, d)
        self.u_exact = _lambdify_vector(u, d)

    def _check_boundary(self, p, u):
        s = np.linspace(0.0, 1.0, 7)
        if self.dimension == 1:
            pts = np.array([[0.0], [1.0]])
        else:
            pts = np.vstack([np.column_stack([s, 0 * s]), np.column_stack([s, 0 * s + 1]),
                             np.column_stack([0 * s, s]), np.column_stack([0 * s + 1, s])])
        for expr in [p, *u]:
            fn = _lambdify_scalar(expr, self.dimension)
            for t in (0.0, 0.37, 1.0):
                if np.max(np.abs(fn(pts, t))) > 1e-12:
                    raise ConfigurationError("manufactured fields must vanish on the boundary")

    def scenario(self, n, dt, T_final=1.0, **options):
        from .scenario import Scenario
        return Scenario(self.dimension, n, T_final, dt, self.c0, self.law,
                        S=self.S, F=self.F, d0=self.d0, **options)


def default_mms_case(dimension, c0, law):
    """Smooth case: ``p = sin(pi x) sin(pi y) e^{-t}`` and a polynomial bubble displacement."""
    if dimension == 1:
        p = sp.sin(sp.pi * X) * sp.exp(-T)
        u = [X * (1 - X) * (1 + T) / 2]
    else:
        p = sp.sin(sp.pi * X) * sp.sin(sp.pi * Y) * sp.exp(-T)
        bubble = X * (1 - X) * Y * (1 - Y)
        u = [bubble * (1 + T), bubble * (1 - T / 2)]
    return MMSCase(dimension, p, u, c0, law)


def temporal_mms_case(c0, law):
    """1D case with an oscillating time factor, so the time-stepping error
    dominates the spatial error on a fine mesh."""
    p = sp.sin(sp.pi * X) * sp.sin(2 * sp.pi * T)
    u = [X * (1 - X) * (1 + T) / 2]
    return MMSCase(1, p, u, c0, law)


def trajectory_errors(ops, record, case):
    """Discrete ``L2(0,T;L2)`` errors of pressure and displacement over steps 1..N."""
    dt = record.times[1] - record.times[0]
    ep = eu = 0.0
    for n in range(1, record.times.size):
        t = record.times[n]
        ep += quadrature_l2_error(ops.mesh, record.p[n], case.p_exact, t) ** 2
        eu += quadrature_l2_error(ops.mesh, record.u[n], case.u_exact, t, ncomp=ops.mesh.dimension) ** 2
    return float(np.sqrt(dt * ep)), float(np.sqrt(dt * eu))


def observed_orders(sizes, errors):
    sizes, errors = np.asarray(sizes, float), np.asarray(errors, float)
    return np.log(errors[:-1] / errors[1:]) / np.log(sizes[:-1] / sizes[1:])


@dataclass
class RateTable:
    kind: str
    rows: list
    orders_p: np.ndarray
    orders_u: np.ndarray

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["study", "n", "dt", "err_p", "err_u", "order_p", "order_u", "picard_iters"])
            for i, row in enumerate(self.rows):
                op = self.orders_p[i - 1] if i else float("nan")
                ou = self.orders_u[i - 1] if i else float("nan")
                writer.writerow([self.kind, row["n"], format_float(row["dt"]), format_float(row["err_p"]),
                                 format_float(row["err_u"]), format_float(op), format_float(ou),
                                 row["iters"]])


def mms_convergence(case, mesh_ladder=(4, 8, 16), dt_factor=2.0, *, temporal_n=64, dt_ladder=None,
                    T_final=1.0, picard_tol=1e-10, max_iters=50):
    """Spatial and temporal convergence tables for a manufactured case.

    The spatial study uses ``dt = dt_factor * h**2`` so both error sources
    shrink like ``h**2``; the temporal study fixes ``n = temporal_n``.
    Returns ``(spatial, temporal)``; ``temporal`` is None without a ``dt_ladder``.
    """
    def run(n, dt):
        sc = case.scenario(n, dt, T_final, picard_tol=picard_tol, max_iters=max_iters)
        ops = operators_for(sc)
        record, history = picard_solve(sc, ops)
        ep, eu = trajectory_errors(ops, record, case)
        return {"n": n, "dt": dt, "err_p": ep, "err_u": eu, "iters": len(history)}

    rows = [run(n, dt_factor / n ** 2) for n in mesh_ladder]
    sizes = [1.0 / r["n"] for r in rows]
    spatial = RateTable("spatial", rows, observed_orders(sizes, [r["err_p"] for r in rows]),
                        observed_orders(sizes, [r["err_u"] for r in rows]))
    temporal = None
    if dt_ladder:
        trows = [run(temporal_n, dt) for dt in dt_ladder]
        dts = [r["dt"] for r in trows]
        temporal = RateTable("temporal", trows, observed_orders(dts, [r["err_p"] for r in trows]),
                             observed_orders(dts, [r["err_u"] for r in trows]))
    return spatial, temporal


def nodal_space_time_norm(ops, traj, dt):
    """``sqrt(dt sum_{n>=1} |f^n|_{L2}^2)`` for nodal P1 trajectories."""
    return float(np.sqrt(dt * sum(ops.l2_norm(row) ** 2 for row in np.asarray(traj)[1:])))


@dataclass
class LimitReport:
    rows: list
    baseline_converged: bool
    baseline: dict = None

    @property
    def c0p_decreasing(self):
        vals = [r["c0p_norm"] for r in self.rows]
        return all(b < a for a, b in zip(vals, vals[1:]))

    @property
    def gap_decreasing(self):
        vals = [r["gap_p"] for r in self.rows]
        return all(b <= a for a, b in zip(vals, vals[1:]))

    @property
    def zeta_gap_decreasing(self):
        vals = [r["gap_zeta"] for r in self.rows]
        return all(b <= a for a, b in zip(vals, vals[1:]))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["c0", "converged", "gap_p", "gap_zeta", "c0p_norm", "picard_iters"])
            for r in ([self.baseline] if self.baseline else []) + self.rows:
                writer.writerow([format_float(r["c0"]), int(r["converged"]), format_float(r["gap_p"]),
                                 format_float(r["gap_zeta"]), format_float(r["c0p_norm"]), r["iters"]])


def incompressible_limit(sc, c0_ladder=(1e-1, 1e-2, 1e-3, 1e-4), ops=None):
    """Compare solutions along a decreasing ``c0`` ladder with the direct ``c0 = 0`` run.

    The first row of the report is the ``c0 = 0`` baseline.  Ladder
    members that fail to converge are kept with ``converged = False``.
    """
    ops = operators_for(sc) if ops is None else ops
    dt = sc.dt

    def solve(c0):
        try:
            record, history = picard_solve(sc.with_(c0=c0), ops)
            return record, len(history), True
        except PicardNonConvergence as exc:
            log.warning("c0=%g did not converge", c0)
            return None, len(exc.history), False

    base, base_iters, base_ok = solve(0.0)
    rows = [{"c0": 0.0, "converged": base_ok, "gap_p": 0.0, "gap_zeta": 0.0, "c0p_norm": 0.0,
             "iters": base_iters}]
    for c0 in c0_ladder:
        record, iters, ok = solve(c0)
        if ok and base_ok:
            gap_p = nodal_space_time_norm(ops, record.p - base.p, dt)
            gap_z = nodal_space_time_norm(ops, record.zeta - base.zeta, dt)
            c0p = nodal_space_time_norm(ops, c0 * record.p, dt)
        else:
            gap_p = gap_z = c0p = float("nan")
        rows.append({"c0": c0, "converged": ok, "gap_p": gap_p, "gap_zeta": gap_z, "c0p_norm": c0p,
                     "iters": iters})
    return LimitReport(rows[1:], base_ok, rows[0])


@dataclass
class UniquenessReport:
    lipschitz: float
    k1: float
    grad_linf: np.ndarray
    gronwall_exponent: float
    p_t_norm: float
    applicable: bool
    probe_agreed: object = None

    @property
    def regularity_finite(self):
        return bool(np.all(np.isfinite(self.grad_linf)) and np.isfinite(self.p_t_norm)
                    and np.isfinite(self.gronwall_exponent))

    @property
    def criterion_satisfied(self):
        if not self.applicable:
            return False
        return self.regularity_finite and bool(self.probe_agreed)


def uniqueness_monitor(ops, record, law, lipschitz=None, probe_agreed=None):
    """Gronwall ingredients of the uniqueness argument for a computed trajectory.

    The exponent is ``(L_k**2 / k1) * dt * sum_n |grad p^n|_inf**2`` with
    the hidden constant set to 1.  ``lipschitz`` overrides the law's
    constant (monitor-only rescaling).
    """
    lk = law.lipschitz_constant if lipschitz is None else float(lipschitz)
    dt = record.times[1] - record.times[0]
    grads = np.array([ops.grad_linf(record.p[n]) for n in range(1, record.times.size)])
    applicable = lk is not None
    exponent = (lk ** 2 / law.k1) * dt * float(np.sum(grads ** 2)) if applicable else float("nan")
    diffs = [ops.l2_norm((record.p[n] - record.p[n - 1]) / dt) ** 2
             for n in range(1, record.times.size) if np.all(np.isfinite(record.p[n - 1]))]
    p_t = float(np.sqrt(dt * np.sum(diffs))) if diffs else 0.0
    return UniquenessReport(lk if applicable else float("nan"), law.k1, grads, exponent, p_t,
                            applicable, probe_agreed)


def uniqueness_probe(sc, ops=None, guesses=("d0", "zero")):
    """Run Picard from two initial guesses and measure the pressure gap in ``L2(0,T;L2)``."""
    ops = operators_for(sc) if ops is None else ops
    first, _ = picard_solve(sc, ops, initial_guess=guesses[0])
    second, _ = picard_solve(sc, ops, initial_guess=guesses[1])
    gap = nodal_space_time_norm(ops, first.p - second.p, sc.dt)
    return gap, first, second


def postprocess_fields(ops, record, law):
    """Darcy velocity ``-k(zeta) grad p`` and total stress ``2 eps(u) + div(u) I - p I`` per cell."""
    mesh = ops.mesh
    d = mesh.dimension
    n_nodes = record.times.size
    velocity = np.full((n_nodes, mesh.n_cells, d), np.nan)
    stress = np.full((n_nodes, mesh.n_cells, d, d), np.nan)
    eye = np.eye(d)
    for n in range(n_nodes):
        p, u = record.p[n], record.u[n]
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(u))):
            continue
        velocity[n] = -law(record.zeta_cells[n])[:, None] * ops.cell_gradients(p)
        grad_u = ops.cell_displacement_gradient(u)
        strain = 0.5 * (grad_u + np.transpose(grad_u, (0, 2, 1)))
        div_u = np.trace(grad_u, axis1=1, axis2=2)
        p_mid = assembly.cell_values(mesh, p)
        stress[n] = 2 * strain + (div_u - p_mid)[:, None, None] * eye
    return {"darcy_velocity": velocity, "total_stress": stress}


def solution_estimates(ops, record, loads, F=None):
    """Constants of the a priori bounds for a computed (nonlinear) trajectory.

    ``energy``: ``c0 max|p|^2 + |p|_{L2V}^2`` over ``|d0|^2 + DATA``;
    ``displacement``: ``|u|_{L2(V)}^2`` (energy norm of ``e``) over
    ``|p|_{L2V}^2 + |F|_{L2L2}^2``; ``content_rate``: ``|zeta_t|_{L2V'}``
    over ``|p|_{L2V} + DATA``; ``content_h1``: ``|zeta|_{L2H1}`` over
    ``|p|_{L2V}``.  Time sums run over steps 1..N.
    """
    dt = record.times[1] - record.times[0]
    steps = range(1, record.times.size)
    l2 = np.array([ops.l2_norm(record.p[n]) for n in steps])
    v_sq = dt * sum(ops.v_norm(record.p[n]) ** 2 for n in steps)
    u_sq = dt * sum(ops.energy_norm_vector(record.u[n]) ** 2 for n in steps)
    rate_sq = dt * sum(ops.dual_norm_Vprime((record.content[n] - record.content[n - 1]) / dt) ** 2 for n in steps)
    h1_sq = dt * sum(ops.h1_norm(record.zeta[n]) ** 2 for n in steps)
    data = record.data_functional
    f_sq = 0.0
    if F is not None:
        mids = ops.mesh.midpoints()
        meas = ops.mesh.cell_measures()
        f_sq = dt * sum(float(np.sum(meas[:, None] * F(mids, record.times[n]) ** 2)) for n in steps)

    def ratio(num, den):
        if den > 0:
            return float(num / den)
        return 0.0 if num == 0 else float("inf")

    return {
        "energy": ratio(record.c0 * np.max(l2 ** 2, initial=0.0) + v_sq, record.d0_l2_sq + data),
        "displacement": ratio(u_sq, v_sq + f_sq),
        "content_rate": ratio(np.sqrt(rate_sq), np.sqrt(v_sq) + data),
        "content_h1": ratio(np.sqrt(h1_sq), np.sqrt(v_sq)),
    }
