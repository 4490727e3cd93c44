"""Operator property battery with an independent element-loop oracle.

The oracle builds every matrix one cell at a time from the vertex
coordinates, inverting the affine map of each simplex directly; it shares
no code with :mod:`biotpicard.assembly` beyond the mesh itself.
"""

from dataclasses import dataclass

import numpy as np

from . import assembly
from .mesh import build_unit_mesh
from .operators import BiotOperators
from .permeability import shipped_laws


def _local_gradients(corners):
    """Gradients of the barycentric basis on one simplex, shape (d+1, d)."""
    d = corners.shape[1]
    jac = (corners[1:] - corners[0]).T
    inv = np.linalg.inv(jac)
    ref = np.vstack([-np.ones(d), np.eye(d)])
    return ref @ inv


def _measure(corners):
    d = corners.shape[1]
    jac = (corners[1:] - corners[0]).T
    return abs(np.linalg.det(jac)) / (1 if d == 1 else 2)


def _mass_points(d):
    # degree-2 exact rules in barycentric coordinates
    if d == 1:
        return np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]), np.array([1 / 6, 4 / 6, 1 / 6])
    return np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]), np.full(3, 1 / 3)


def oracle_matrices(mesh, law=None, z_cells=None):
    """Dense mass, stiffness, weighted stiffness, elasticity and coupling matrices."""
    d = mesh.dimension
    nv = mesh.n_vertices
    mass = np.zeros((nv, nv))
    stiff = np.zeros((nv, nv))
    weighted = np.zeros((nv, nv))
    elast = np.zeros((nv * d, nv * d))
    coup = np.zeros((nv, nv * d))
    bary, weights = _mass_points(d)
    for k, cell in enumerate(mesh.cells):
        corners = mesh.vertices[cell]
        grads = _local_gradients(corners)
        area = _measure(corners)
        kval = 1.0 if law is None else float(law(np.array([z_cells[k]]))[0])
        for a, va in enumerate(cell):
            for b, vb in enumerate(cell):
                mass[va, vb] += area * np.sum(weights * bary[:, a] * bary[:, b])
                stiff[va, vb] += area * grads[a] @ grads[b]
                weighted[va, vb] += area * kval * grads[a] @ grads[b]
                for c in range(d):
                    # (psi_a, d_c phi_b) with the midpoint value 1/(d+1) of psi_a
                    coup[va, vb * d + c] += area * grads[b, c] / (d + 1)
                    for e in range(d):
                        # div-div + grad:grad + grad:grad^T for phi_a e_c, phi_b e_e
                        val = grads[a, c] * grads[b, e] + grads[a, e] * grads[b, c]
                        if c == e:
                            val += grads[a] @ grads[b]
                        elast[va * d + c, vb * d + e] += area * val
    return {"mass": mass, "stiffness": stiff, "weighted": weighted, "elasticity": elast, "coupling": coup}


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _relative_gap(a, b):
    return float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(b))))


def check_assembly(mesh, rng, tol=1e-12):
    law = shipped_laws()["clamped-exponential"]
    z_cells = rng.uniform(-2.0, 2.0, mesh.n_cells)
    oracle = oracle_matrices(mesh, law, z_cells)
    built = {
        "mass": assembly.assemble_mass(mesh),
        "stiffness": assembly.assemble_stiffness(mesh),
        "weighted": assembly.assemble_weighted_stiffness(mesh, z_cells=z_cells, law=law),
        "elasticity": assembly.assemble_elasticity(mesh),
        "coupling": assembly.assemble_coupling(mesh),
    }
    checks = []
    for name, matrix in built.items():
        gap = float(np.max(np.abs(matrix.toarray() - oracle[name])))
        checks.append(Check(f"oracle {name}", gap <= tol, f"max entry gap {gap:.2e}"))
        if name != "coupling":
            sym = assembly.is_symmetric(matrix)
            checks.append(Check(f"symmetric {name}", sym, "transpose check"))
    return checks


def check_operators(ops, rng, n_random=100, c0=0.1):
    checks = []
    m = ops.M.toarray()
    b = ops.B_matrix()
    mb = m @ b
    nfree = m.shape[0]
    if nfree == 0:
        return [Check("operators", True, "no free dofs")]
    sym_gap = float(np.max(np.abs(mb - mb.T))) / max(float(np.max(np.abs(mb))), 1e-300)
    checks.append(Check("B M-symmetric", sym_gap <= 1e-10, f"relative gap {sym_gap:.2e}"))

    # generalized eigenvalues of (M B, M) are those of B
    lam = np.linalg.eigvalsh(0.5 * (mb + mb.T))
    min_eig = float(lam.min())
    checks.append(Check("B positive semidefinite", min_eig >= -1e-10, f"min eigenvalue {min_eig:.2e}"))

    worst_mean = 0.0
    for _ in range(5):
        p = rng.standard_normal(nfree)
        bp = ops.apply_B(ops.scalar.extend(p))
        worst_mean = max(worst_mean, abs(float(np.sum(ops.mass_full @ bp))) / max(1.0, ops.l2_norm(bp)))
    checks.append(Check("B mean-zero range", worst_mean <= 1e-10, f"max |mean| {worst_mean:.2e}"))

    a = ops.content_matrix(c0)
    worst = np.inf
    for _ in range(n_random):
        x = rng.standard_normal(nfree)
        lhs = x @ a @ x
        rhs = c0 * x @ m @ x
        worst = min(worst, (lhs - rhs) / max(abs(rhs), 1e-300))
    checks.append(Check("c0I+B coercivity", worst >= -1e-12, f"min relative slack {worst:.2e}"))

    worst_iso = 0.0
    k = ops.K.toarray()
    for _ in range(10):
        x = rng.standard_normal(nfree)
        gap = abs(ops.dual_norm_Vprime(k @ x) - np.sqrt(x @ k @ x)) / np.sqrt(x @ k @ x)
        worst_iso = max(worst_iso, gap)
    checks.append(Check("Riesz isometry", worst_iso <= 1e-10, f"max relative gap {worst_iso:.2e}"))

    # reported, not asserted: injectivity of B on the discrete space
    injective = min_eig > 1e-12 * max(1.0, float(lam.max()))
    checks.append(Check("B injective (reported)", True,
                        f"min eigenvalue {min_eig:.2e}, {'injective' if injective else 'kernel present'}"))
    return checks


def check_sandwich(mesh, rng, n_random=100, laws=None):
    """``k1 x^T K x <= x^T A(z) x <= k2 x^T K x`` for random ``(x, z)`` per law."""
    laws = shipped_laws() if laws is None else laws
    checks = []
    k_full = assembly.assemble_stiffness(mesh)
    interior = np.setdiff1d(np.arange(mesh.n_vertices), mesh.boundary_vertices)
    k = k_full[interior][:, interior].toarray()
    for name, law in laws.items():
        worst = np.inf
        for _ in range(n_random):
            z = rng.uniform(-5.0, 5.0, mesh.n_cells)
            x = rng.standard_normal(interior.size)
            a = assembly.assemble_weighted_stiffness(mesh, z_cells=z, law=law)[interior][:, interior]
            q = x @ (a @ x)
            base = x @ k @ x
            lower = (q - law.k1 * base) / base
            upper = (law.k2 * base - q) / base
            worst = min(worst, lower, upper)
        checks.append(Check(f"sandwich {name}", worst >= -1e-12, f"min relative slack {worst:.2e}"))
    return checks


BATTERY_MESHES = ((1, 4), (1, 8), (2, 2), (2, 4))


def run_battery(seed=0, meshes=BATTERY_MESHES):
    """Run every check on every mesh; returns a list of ``(dimension, n, Check)``."""
    rng = np.random.default_rng(seed)
    results = []
    for dimension, n in meshes:
        mesh = build_unit_mesh(dimension, n)
        ops = BiotOperators(mesh)
        for check in (check_assembly(mesh, rng) + check_operators(ops, rng) + check_sandwich(mesh, rng)):
            results.append((dimension, n, check))
    return results
