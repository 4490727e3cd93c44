"""Structured simplicial meshes of the unit interval and unit square.

Vertices of the 2D mesh are numbered row by row, ``v = i + j*(n+1)`` with
``x = i/n`` and ``y = j/n``.  Each grid square is split along its
lower-left/upper-right diagonal into two counter-clockwise triangles.
Vector degrees of freedom are interleaved per vertex: ``dof = d*v + c``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

SCALAR = "scalar"
VECTOR = "vector"


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh of ``(0, 1)**dimension``.

    Attributes
    ----------
    dimension : int
        1 or 2.
    n : int
        Cells per axis.
    vertices : ndarray, shape (n_vertices, dimension)
    cells : ndarray of int, shape (n_cells, dimension + 1)
    boundary_vertices : ndarray of int
        Sorted indices of vertices on the boundary.
    """

    dimension: int
    n: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_vertices: np.ndarray
    _geometry: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @property
    def h(self):
        return 1.0 / self.n

    def cell_measures(self):
        """Signed length or area of every cell (positive for a valid mesh)."""
        if "measures" not in self._geometry:
            self._compute_geometry()
        return self._geometry["measures"]

    def basis_gradients(self):
        """Gradients of the P1 basis functions, shape (n_cells, d+1, d)."""
        if "gradients" not in self._geometry:
            self._compute_geometry()
        return self._geometry["gradients"]

    def midpoints(self):
        """Cell barycentres, shape (n_cells, d)."""
        return self.vertices[self.cells].mean(axis=1)

    def _compute_geometry(self):
        corners = self.vertices[self.cells]
        # columns of the affine map from the reference simplex
        jac = np.transpose(corners[:, 1:, :] - corners[:, :1, :], (0, 2, 1))
        det = np.linalg.det(jac)
        inv = np.linalg.inv(jac)
        grads = np.empty((self.n_cells, self.dimension + 1, self.dimension))
        grads[:, 1:, :] = inv
        grads[:, 0, :] = -inv.sum(axis=1)
        factorial = 1.0 if self.dimension == 1 else 2.0
        self._geometry["measures"] = det / factorial
        self._geometry["gradients"] = grads


@dataclass(frozen=True, eq=False)
class DofMap:
    """Split of nodal degrees of freedom into free and Dirichlet-pinned sets."""

    space_kind: str
    n_components: int
    n_dofs: int
    interior_dofs: np.ndarray
    dirichlet_dofs: np.ndarray

    @property
    def n_interior(self):
        return self.interior_dofs.size

    def restrict(self, values):
        """Return the interior entries of a full-length vector."""
        return np.asarray(values)[..., self.interior_dofs]

    def extend(self, interior_values):
        """Embed interior coefficients into a full vector with zeros on the boundary."""
        interior_values = np.asarray(interior_values, dtype=float)
        out = np.zeros(interior_values.shape[:-1] + (self.n_dofs,))
        out[..., self.interior_dofs] = interior_values
        return out


def build_unit_mesh(dimension, n):
    """Build the structured mesh of the unit interval or square.

    Parameters
    ----------
    dimension : int
        1 or 2.
    n : int
        Number of cells per axis (at least 1).
    """
    if dimension not in (1, 2):
        raise ConfigurationError(f"dimension must be 1 or 2, got {dimension!r}")
    if int(n) != n or n < 1:
        raise ConfigurationError(f"cells per axis must be a positive integer, got {n!r}")
    n = int(n)
    ticks = np.arange(n + 1) / n

    if dimension == 1:
        vertices = ticks[:, None].copy()
        cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        boundary = np.array([0, n])
    else:
        xx, yy = np.meshgrid(ticks, ticks, indexing="xy")
        vertices = np.column_stack([xx.ravel(), yy.ravel()])
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
        v00 = (i + j * (n + 1)).ravel()
        v10 = v00 + 1
        v01 = v00 + (n + 1)
        v11 = v01 + 1
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
        cells = np.empty((2 * n * n, 3), dtype=int)
        cells[0::2] = lower
        cells[1::2] = upper
        on_edge = np.any((vertices == 0.0) | (vertices == 1.0), axis=1)
        boundary = np.flatnonzero(on_edge)

    return Mesh(dimension, n, vertices, cells.astype(np.int64), boundary.astype(np.int64))


def build_dofmap(mesh, space_kind=SCALAR):
    """P1 degree-of-freedom map with homogeneous Dirichlet data on the whole boundary."""
    if space_kind == SCALAR:
        ncomp = 1
    elif space_kind == VECTOR:
        ncomp = mesh.dimension
    else:
        raise ConfigurationError(f"unknown space kind {space_kind!r}")

    n_dofs = mesh.n_vertices * ncomp
    pinned = (mesh.boundary_vertices[:, None] * ncomp + np.arange(ncomp)).ravel()
    mask = np.zeros(n_dofs, dtype=bool)
    mask[pinned] = True
    return DofMap(
        space_kind=space_kind,
        n_components=ncomp,
        n_dofs=n_dofs,
        interior_dofs=np.flatnonzero(~mask),
        dirichlet_dofs=np.flatnonzero(mask),
    )


def format_float(value):
    return f"{float(value):.17g}"


def write_mesh(mesh, path):
    """Write the plain-text mesh dump.

    The header line is ``dim n_vertices n_cells``; vertex coordinates follow
    one per line, then the cell vertex tuples.
    """
    lines = [f"{mesh.dimension} {mesh.n_vertices} {mesh.n_cells}"]
    lines += [" ".join(format_float(c) for c in xy) for xy in mesh.vertices]
    lines += [" ".join(str(int(v)) for v in cell) for cell in mesh.cells]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    """Inverse of :func:`write_mesh`."""
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip()]
    dim, nv, nc = (int(v) for v in rows[0])
    vertices = np.array(rows[1:1 + nv], dtype=float).reshape(nv, dim)
    cells = np.array(rows[1 + nv:1 + nv + nc], dtype=np.int64)
    n = nc if dim == 1 else int(round(np.sqrt(nc / 2)))
    boundary = np.flatnonzero(np.any((vertices == 0.0) | (vertices == 1.0), axis=1))
    return Mesh(dim, n, vertices, cells, boundary)
