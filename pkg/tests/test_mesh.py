import numpy as np
import pytest
from hypothesis import given, strategies as st

from biotpicard.errors import ConfigurationError
from biotpicard.mesh import SCALAR, VECTOR, build_dofmap, build_unit_mesh, read_mesh, write_mesh


def test_interval_counts():
    mesh = build_unit_mesh(1, 4)
    assert mesh.n_vertices == 5
    assert mesh.n_cells == 4
    assert set(mesh.boundary_vertices) == {0, 4}


def test_single_square_has_two_triangles_all_on_boundary():
    mesh = build_unit_mesh(2, 1)
    assert mesh.n_vertices == 4
    assert mesh.n_cells == 2
    assert set(mesh.boundary_vertices) == {0, 1, 2, 3}


def test_total_area_fine_mesh():
    mesh = build_unit_mesh(2, 32)
    assert abs(mesh.cell_measures().sum() - 1.0) <= 1e-12


@pytest.mark.parametrize("dimension, n", [(0, 4), (3, 2), (1, 0), (2, -1), (1, 2.5)])
def test_invalid_input(dimension, n):
    with pytest.raises(ConfigurationError):
        build_unit_mesh(dimension, n)


@given(st.sampled_from([1, 2]), st.integers(1, 12))
def test_mesh_invariants(dimension, n):
    mesh = build_unit_mesh(dimension, n)
    meas = mesh.cell_measures()
    assert np.all(meas > 0)
    assert abs(meas.sum() - 1.0) <= 1e-12
    on_boundary = np.any((mesh.vertices == 0) | (mesh.vertices == 1), axis=1)
    assert np.array_equal(np.flatnonzero(on_boundary), np.sort(mesh.boundary_vertices))
    # gradients of barycentric functions sum to zero on every cell
    assert np.allclose(mesh.basis_gradients().sum(axis=1), 0.0, atol=1e-12)


@given(st.sampled_from([1, 2]), st.integers(1, 8), st.sampled_from([SCALAR, VECTOR]))
def test_dofmap_partition(dimension, n, kind):
    mesh = build_unit_mesh(dimension, n)
    dm = build_dofmap(mesh, kind)
    union = np.concatenate([dm.interior_dofs, dm.dirichlet_dofs])
    assert np.array_equal(np.sort(union), np.arange(dm.n_dofs))
    assert np.intersect1d(dm.interior_dofs, dm.dirichlet_dofs).size == 0
    ncomp = dm.n_components
    for v in mesh.boundary_vertices:
        assert set(range(v * ncomp, v * ncomp + ncomp)) <= set(dm.dirichlet_dofs)


def test_dofmap_examples():
    assert list(build_dofmap(build_unit_mesh(1, 4), SCALAR).interior_dofs) == [1, 2, 3]
    assert build_dofmap(build_unit_mesh(2, 1), SCALAR).interior_dofs.size == 0
    dm = build_dofmap(build_unit_mesh(2, 2), VECTOR)
    assert list(dm.interior_dofs) == [8, 9]


def test_restrict_extend_round_trip(rng):
    dm = build_dofmap(build_unit_mesh(2, 3), VECTOR)
    x = rng.standard_normal(dm.n_interior)
    full = dm.extend(x)
    assert np.all(full[dm.dirichlet_dofs] == 0)
    assert np.array_equal(dm.restrict(full), x)


def test_unknown_space_kind():
    with pytest.raises(ConfigurationError):
        build_dofmap(build_unit_mesh(1, 2), "tensor")


@pytest.mark.parametrize("dimension, n", [(1, 5), (2, 3)])
def test_mesh_dump_round_trip(tmp_path, dimension, n):
    mesh = build_unit_mesh(dimension, n)
    write_mesh(mesh, tmp_path / "mesh.txt")
    back = read_mesh(tmp_path / "mesh.txt")
    assert back.n == n
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.cells, mesh.cells)
    assert np.array_equal(back.boundary_vertices, mesh.boundary_vertices)
