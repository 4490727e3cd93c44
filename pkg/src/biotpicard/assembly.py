"""P1 assembly of the mass, stiffness, elasticity and coupling matrices.

All assemblers return the full (unconstrained) matrix over every nodal
degree of freedom as ``scipy.sparse.csr_matrix``.  Use :func:`constrain`
to impose the homogeneous Dirichlet convention (identity rows/columns on
pinned dofs), or slice with ``dofmap.interior_dofs`` to get the free block.

Quadrature is the one-point cell-midpoint rule, except for the mass matrix,
which is integrated exactly.
"""

import numpy as np
import scipy.sparse as sps

from .errors import ConfigurationError
from .mesh import format_float


def _scatter(rows, cols, local, shape):
    coo = sps.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=shape)
    out = coo.tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out


def _pairs(index):
    nloc = index.shape[1]
    rows = np.repeat(index[:, :, None], nloc, axis=2)
    cols = np.repeat(index[:, None, :], nloc, axis=1)
    return rows, cols


def _vector_index(mesh):
    d = mesh.dimension
    # local ordering: (vertex a, component c) -> a*d + c
    return (mesh.cells[:, :, None] * d + np.arange(d)).reshape(mesh.n_cells, -1)


def cell_values(mesh, nodal):
    """Value of a P1 field at every cell midpoint."""
    nodal = np.asarray(nodal, dtype=float)
    return nodal[..., mesh.cells].mean(axis=-1)


def assemble_mass(mesh):
    """Exact P1 mass matrix, ``x^T M x = ||x_h||^2`` in L2."""
    d = mesh.dimension
    nloc = d + 1
    meas = mesh.cell_measures()
    # integral of lambda_a * lambda_b over a simplex: |K| (1 + delta_ab) / ((d+1)(d+2))
    ref = (np.ones((nloc, nloc)) + np.eye(nloc)) / ((d + 1) * (d + 2))
    local = meas[:, None, None] * ref
    rows, cols = _pairs(mesh.cells)
    n = mesh.n_vertices
    return _scatter(rows, cols, local, (n, n))


def assemble_stiffness(mesh):
    """Gram matrix of gradients, ``x^T K x = ||grad x_h||^2``."""
    return assemble_weighted_stiffness(mesh, z_cells=np.zeros(mesh.n_cells), law=None)


def assemble_weighted_stiffness(mesh, z=None, law=None, *, z_cells=None, shift=None):
    """Matrix of ``(k(z) grad p, grad q)`` with ``k`` sampled at cell midpoints.

    Parameters
    ----------
    z : array_like, optional
        Nodal P1 field; its midpoint values are used.
    law : PermeabilityLaw or None
        ``None`` means unit weight.
    z_cells : array_like, optional
        Midpoint values of the permeability argument, overriding ``z``.
    shift : array_like, optional
        Per-cell offset added to the argument before evaluating the law.
    """
    if z_cells is None:
        if z is None:
            raise ConfigurationError("weighted stiffness needs z or z_cells")
        z_cells = cell_values(mesh, z)
    z_cells = np.asarray(z_cells, dtype=float)
    if z_cells.shape != (mesh.n_cells,):
        raise ConfigurationError(f"z_cells must have shape ({mesh.n_cells},)")
    if law is None:
        weight = np.ones(mesh.n_cells)
    else:
        if not law.k1 > 0:
            raise ConfigurationError("permeability lower bound must be positive")
        arg = z_cells if shift is None else z_cells + shift
        weight = law(arg)
    grads = mesh.basis_gradients()
    local = np.einsum("kad,kbd->kab", grads, grads)
    local *= (weight * mesh.cell_measures())[:, None, None]
    rows, cols = _pairs(mesh.cells)
    n = mesh.n_vertices
    return _scatter(rows, cols, local, (n, n))


def assemble_elasticity(mesh):
    """Matrix of ``e(u, w) = (div u, div w) + (grad u, grad w) + (grad u, grad w^T)``."""
    d = mesh.dimension
    g = mesh.basis_gradients()
    eye = np.eye(d)
    # entry for (a, c) x (b, e): g_a[c] g_b[e] + delta_ce g_a.g_b + g_a[e] g_b[c]
    div_div = np.einsum("kac,kbe->kacbe", g, g)
    grad_grad = np.einsum("kad,kbd,ce->kacbe", g, g, eye)
    transposed = np.einsum("kae,kbc->kacbe", g, g)
    local = (div_div + grad_grad + transposed) * mesh.cell_measures()[:, None, None, None, None]
    nloc = (d + 1) * d
    local = local.reshape(mesh.n_cells, nloc, nloc)
    index = _vector_index(mesh)
    rows, cols = _pairs(index)
    n = mesh.n_vertices * d
    return _scatter(rows, cols, local, (n, n))


def assemble_coupling(mesh):
    """Pressure-dilation pairing ``G[i, j] = (psi_i, div phi_j)``.

    Rows run over scalar dofs, columns over vector dofs, so ``G @ u`` gives
    ``(div u, q_i)`` and ``G.T @ p`` gives ``(p, div w_j)``.
    """
    d = mesh.dimension
    g = mesh.basis_gradients()
    # midpoint value of each scalar basis function is 1/(d+1)
    local = np.broadcast_to(
        (g.reshape(mesh.n_cells, 1, -1) * mesh.cell_measures()[:, None, None]) / (d + 1),
        (mesh.n_cells, d + 1, (d + 1) * d),
    )
    vindex = _vector_index(mesh)
    rows = np.repeat(mesh.cells[:, :, None], vindex.shape[1], axis=2)
    cols = np.repeat(vindex[:, None, :], d + 1, axis=1)
    return _scatter(rows, cols, np.ascontiguousarray(local), (mesh.n_vertices, mesh.n_vertices * d))


def assemble_load(mesh, f, dofmap=None, t=None, *, zero_dirichlet=True):
    """Midpoint-rule load vector ``(f, phi_i)``.

    Parameters
    ----------
    f : callable or array_like
        ``f(x)`` or ``f(x, t)`` evaluated on midpoints (shape (n_cells, d)),
        returning ``(n_cells,)`` for scalar or ``(n_cells, d)`` for vector
        sources; or a nodal coefficient vector, or a scalar constant.
    dofmap : DofMap, optional
        Determines scalar vs vector layout and which entries to zero.
    """
    d = mesh.dimension
    ncomp = 1 if dofmap is None else dofmap.n_components
    mids = mesh.midpoints()
    if callable(f):
        vals = np.asarray(f(mids) if t is None else f(mids, t), dtype=float)
    else:
        arr = np.asarray(f, dtype=float)
        if arr.ndim == 0:
            vals = np.full((mesh.n_cells,) if ncomp == 1 else (mesh.n_cells, ncomp), float(arr))
        elif arr.shape[0] == mesh.n_vertices * ncomp:
            vals = arr.reshape(mesh.n_vertices, ncomp)[mesh.cells].mean(axis=1)
            if ncomp == 1:
                vals = vals[:, 0]
        else:
            raise ConfigurationError("nodal source has the wrong length")
    if ncomp == 1 and vals.ndim == 2 and vals.shape[1] == 1:
        vals = vals[:, 0]
    vals = np.broadcast_to(vals, (mesh.n_cells,) if ncomp == 1 else (mesh.n_cells, ncomp))
    weight = mesh.cell_measures() / (d + 1)
    out = np.zeros(mesh.n_vertices * ncomp)
    if ncomp == 1:
        np.add.at(out, mesh.cells, (weight * vals)[:, None])
    else:
        contrib = (weight[:, None] * vals)[:, None, :]
        index = mesh.cells[:, :, None] * ncomp + np.arange(ncomp)
        np.add.at(out, index, np.broadcast_to(contrib, index.shape))
    if zero_dirichlet and dofmap is not None:
        out[dofmap.dirichlet_dofs] = 0.0
    return out


def constrain(matrix, dofmap):
    """Replace Dirichlet rows and columns by the identity."""
    a = sps.lil_matrix(matrix, copy=True)
    pinned = dofmap.dirichlet_dofs
    a[pinned, :] = 0.0
    a[:, pinned] = 0.0
    a[pinned, pinned] = 1.0
    out = a.tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def is_symmetric(matrix, rtol=1e-12):
    a = sps.csr_matrix(matrix)
    scale = abs(a).max() if a.nnz else 0.0
    diff = abs(a - a.T).max() if a.nnz else 0.0
    return diff <= rtol * scale


def write_matrix(matrix, path):
    """Coordinate dump ``row col value`` sorted lexicographically."""
    coo = sps.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {format_float(coo.data[k])}\n")


def read_matrix(path, shape):
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sps.csr_matrix(shape)
    return sps.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=shape).tocsr()
