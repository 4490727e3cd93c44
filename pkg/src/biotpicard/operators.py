"""Elasticity solve, pressure-to-dilation operator and discrete dual norms.

Everything for one mesh lives on a :class:`BiotOperators` instance: the
assembled matrices, their free-dof blocks and the factorizations.  Scalar
fields are full nodal vectors (zeros on the boundary for pressures);
vector fields are full interleaved nodal vectors.

The pressure-to-dilation map acts as ``p -> div u`` where ``u`` solves the
elasticity problem driven by ``(p, div w)``.  Its Galerkin pairing against
free pressure test functions is the dense Schur-type matrix
``S_B = G Ke^{-1} G^T``; the nodal field ``Bp`` is the L2 projection of
``div u`` onto the full P1 space, so it keeps the mean-zero property.
"""

import logging

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import assembly
from .errors import PreconditionError, SolverBreakdown
from .mesh import SCALAR, VECTOR, build_dofmap

log = logging.getLogger(__name__)

C0_MIN = 1e-12


def _block(matrix, rows, cols):
    return sps.csr_matrix(matrix)[rows][:, cols].tocsc()


class BiotOperators:
    """All discrete operators of the poroelastic system on one mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.scalar = build_dofmap(mesh, SCALAR)
        self.vector = build_dofmap(mesh, VECTOR)
        si, vi = self.scalar.interior_dofs, self.vector.interior_dofs

        self.mass_full = assembly.assemble_mass(mesh)
        self.stiffness_full = assembly.assemble_stiffness(mesh)
        self.elasticity_full = assembly.assemble_elasticity(mesh)
        self.coupling_full = assembly.assemble_coupling(mesh)

        self.M = _block(self.mass_full, si, si)
        self.K = _block(self.stiffness_full, si, si)
        self.Ke = _block(self.elasticity_full, vi, vi)
        self.G = _block(self.coupling_full, si, vi)
        # all scalar rows against free displacement columns, for projecting div u
        self.G_all = _block(self.coupling_full, np.arange(self.scalar.n_dofs), vi)

        self._ke = spla.splu(self.Ke) if vi.size else None
        self._k = spla.splu(self.K) if si.size else None
        self._m_full = spla.splu(self.mass_full.tocsc())
        self._schur = None
        self._vector_laplacian = None

    # -- field helpers -------------------------------------------------

    def full_scalar(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] == self.scalar.n_dofs:
            return p
        if p.shape[-1] == self.scalar.n_interior:
            return self.scalar.extend(p)
        raise ValueError(f"scalar field has length {p.shape[-1]}")

    def interior_scalar(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] == self.scalar.n_interior:
            return p
        return self.scalar.restrict(p)

    def vector_load(self, F, t=None):
        """Load vector ``(F, w)`` on free displacement dofs; ``F`` may be None."""
        if F is None:
            return np.zeros(self.vector.n_interior)
        if callable(F):
            full = assembly.assemble_load(self.mesh, F, self.vector, t)
            return self.vector.restrict(full)
        F = np.asarray(F, dtype=float)
        if F.shape == (self.vector.n_interior,):
            return F
        return self.vector.restrict(F)

    def scalar_load(self, S, t=None):
        """Load vector ``<S, q>`` on free pressure dofs; ``S`` may be None."""
        if S is None:
            return np.zeros(self.scalar.n_interior)
        if callable(S) or np.ndim(S) == 0:
            full = assembly.assemble_load(self.mesh, S, self.scalar, t)
            return self.scalar.restrict(full)
        S = np.asarray(S, dtype=float)
        if S.shape == (self.scalar.n_interior,):
            return S
        return self.scalar.restrict(S)

    # -- elasticity ----------------------------------------------------

    def solve_elasticity(self, p=None, F=None, t=None):
        """Displacement with ``e(u, w) = (p, div w) + (F, w)`` for all free ``w``.

        Returns the full interleaved nodal vector.
        """
        rhs = self.vector_load(F, t)
        if p is not None:
            rhs = rhs + self.G.T @ self.interior_scalar(p)
        return self.vector.extend(self._solve_ke(rhs))

    def _solve_ke(self, rhs):
        if self._ke is None:
            return np.zeros_like(rhs)
        u = self._ke.solve(np.asarray(rhs, dtype=float))
        if rhs.ndim == 1 and np.any(rhs):
            res = np.linalg.norm(self.Ke @ u - rhs) / np.linalg.norm(rhs)
            if not res <= 1e-10:
                raise SolverBreakdown(f"elasticity solve residual {res:.3e}")
        return u

    def elasticity_stability_constant(self, u, rhs):
        """Ratio ``|grad u| / |rhs|_{H^-1}`` measured with the componentwise Laplacian."""
        if self._vector_laplacian is None:
            lap = sps.kron(self.stiffness_full, sps.identity(self.mesh.dimension), format="csr")
            vi = self.vector.interior_dofs
            self._vector_laplacian = _block(lap, vi, vi)
            self._vector_laplacian_lu = spla.splu(self._vector_laplacian)
        u = self.vector.restrict(u) if u.shape[-1] == self.vector.n_dofs else u
        num = np.sqrt(u @ (self._vector_laplacian @ u))
        den = np.sqrt(rhs @ self._vector_laplacian_lu.solve(rhs))
        return num / den if den > 0 else 0.0

    # -- pressure-to-dilation ------------------------------------------

    @property
    def schur(self):
        """Dense ``G Ke^{-1} G^T`` over free pressure dofs, i.e. the matrix ``M B``."""
        if self._schur is None:
            if self.scalar.n_interior == 0 or self._ke is None:
                self._schur = np.zeros((self.scalar.n_interior,) * 2)
            else:
                gt = self.G.T.toarray()
                self._schur = self.G @ self._ke.solve(gt)
        return self._schur

    def B_matrix(self):
        """Galerkin matrix of ``B`` on free pressure dofs, ``M^{-1} G Ke^{-1} G^T``."""
        return sla.solve(self.M.toarray(), self.schur, assume_a="pos")

    def dilation_from_displacement(self, u):
        """L2 projection of ``div u`` onto the full P1 space (nodal)."""
        return self._m_full.solve(self.G_all @ self.vector.restrict(u))

    def apply_B(self, p):
        """Nodal field ``Bp`` with ``(Bp, q) = (div u_p, q)`` for every P1 ``q``."""
        u = self.solve_elasticity(p)
        return self.dilation_from_displacement(u)

    def sqrt_B_diag(self, p):
        """``(Bp, p)``, the square of the ``B^{1/2}`` seminorm."""
        p = self.full_scalar(p)
        value = float(p @ (self.mass_full @ self.apply_B(p)))
        scale = max(1.0, float(p @ (self.mass_full @ p)))
        if value < -1e-10 * scale:
            raise SolverBreakdown(f"(Bp, p) = {value:.3e} is negative; B must be non-negative")
        return max(value, 0.0)

    def solve_c0_plus_B(self, rhs, c0):
        """Pressure ``p`` in V_h with ``((c0 I + B) p, q) = (rhs, q)`` for all free ``q``.

        ``rhs`` is a nodal P1 field (full or interior length).
        """
        if not c0 >= C0_MIN:
            raise PreconditionError(f"c0 must be at least {C0_MIN:g} for direct inversion, got {c0}")
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[-1] == self.scalar.n_interior:
            b = self.M @ rhs
        else:
            b = self.scalar.restrict(self.mass_full @ rhs)
        return self.scalar.extend(self.solve_content(b, c0))

    def content_matrix(self, c0):
        """``c0 M + M B`` on free pressure dofs (dense)."""
        return c0 * self.M.toarray() + self.schur

    def solve_content(self, b, c0):
        """Solve ``(c0 M + M B) p = b`` for free pressure coefficients."""
        if b.size == 0:
            return b.copy()
        a = self.content_matrix(c0)
        p = sla.cho_solve(sla.cho_factor(a), b)
        res = np.linalg.norm(a @ p - b) / max(np.linalg.norm(b), 1e-300)
        if np.any(b) and not res <= 1e-10:
            raise SolverBreakdown(f"(c0 I + B) solve residual {res:.3e}", np.linalg.cond(a))
        return p

    # -- norms ---------------------------------------------------------

    def dual_norm_Vprime(self, f):
        """``sqrt(f^T K^{-1} f)`` for a functional on free pressure dofs."""
        f = np.asarray(f, dtype=float)
        if f.shape[-1] == self.scalar.n_dofs:
            f = self.scalar.restrict(f)
        if f.size == 0 or not np.any(f):
            return 0.0
        return float(np.sqrt(max(f @ self._k.solve(f), 0.0)))

    def dual_norm_vector(self, f):
        """Norm of a displacement functional dual to the energy norm of ``e``."""
        f = np.asarray(f, dtype=float)
        if f.shape[-1] == self.vector.n_dofs:
            f = self.vector.restrict(f)
        if f.size == 0 or not np.any(f):
            return 0.0
        return float(np.sqrt(max(f @ self._ke.solve(f), 0.0)))

    def l2_norm(self, field):
        field = np.asarray(field, dtype=float)
        if field.shape[-1] == self.scalar.n_interior:
            field = self.scalar.extend(field)
        return float(np.sqrt(max(field @ (self.mass_full @ field), 0.0)))

    def v_norm(self, p):
        p = self.full_scalar(p)
        return float(np.sqrt(max(p @ (self.stiffness_full @ p), 0.0)))

    def h1_norm(self, z):
        z = np.asarray(z, dtype=float)
        return float(np.sqrt(max(z @ (self.mass_full @ z) + z @ (self.stiffness_full @ z), 0.0)))

    def energy_norm_vector(self, u):
        return float(np.sqrt(max(u @ (self.elasticity_full @ u), 0.0)))

    def cell_gradients(self, p):
        """Constant P1 gradient on every cell, shape (n_cells, d)."""
        p = self.full_scalar(p)
        return np.einsum("ka,kad->kd", p[self.mesh.cells], self.mesh.basis_gradients())

    def grad_linf(self, p):
        return float(np.max(np.linalg.norm(self.cell_gradients(p), axis=1)))

    def cell_divergence(self, u):
        """Constant ``div u`` on every cell."""
        d = self.mesh.dimension
        nodal = np.asarray(u, dtype=float).reshape(self.mesh.n_vertices, d)[self.mesh.cells]
        return np.einsum("kac,kac->k", nodal, self.mesh.basis_gradients())

    def cell_displacement_gradient(self, u):
        """``grad u`` per cell, shape (n_cells, d, d) with ``[i, j] = d_j u_i``."""
        d = self.mesh.dimension
        nodal = np.asarray(u, dtype=float).reshape(self.mesh.n_vertices, d)[self.mesh.cells]
        return np.einsum("kai,kaj->kij", nodal, self.mesh.basis_gradients())


# Module-level conveniences mirroring the operator contracts.

def solve_elasticity(ops, p=None, F=None, t=None):
    return ops.solve_elasticity(p, F, t)


def apply_B(ops, p):
    return ops.apply_B(p)


def solve_c0_plus_B(ops, rhs, c0):
    return ops.solve_c0_plus_B(rhs, c0)


def sqrt_B_diag(ops, p):
    return ops.sqrt_B_diag(p)


def dual_norm_Vprime(ops, f):
    return ops.dual_norm_Vprime(f)
