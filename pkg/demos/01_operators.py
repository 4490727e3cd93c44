"""Walk through the discrete operators on a small mesh."""

import numpy as np

from biotpicard import BiotOperators, assemble_mass, assemble_stiffness, build_unit_mesh

mesh = build_unit_mesh(2, 4)  # 25 vertices, 32 triangles
print(mesh.n_vertices, mesh.n_cells, mesh.cell_measures().sum())

# mass and stiffness over every vertex; boundary rows are still present here
M = assemble_mass(mesh)
K = assemble_stiffness(mesh)
one = np.ones(mesh.n_vertices)
print("area from M:", one @ M @ one)
print("K kills constants:", np.abs(K @ one).max())

ops = BiotOperators(mesh)  # free-dof blocks and factorizations

# pressure -> displacement -> dilation
x, y = mesh.vertices.T
p = np.sin(np.pi * x) * np.sin(np.pi * y)
u = ops.solve_elasticity(p)
Bp = ops.apply_B(p)
print("mean of Bp:", np.sum(ops.mass_full @ Bp))  # zero up to rounding
print("(Bp, p):", ops.sqrt_B_diag(p))

# the matrix of B on free dofs is M-symmetric and positive semidefinite
MB = ops.M.toarray() @ ops.B_matrix()
print("asymmetry:", np.abs(MB - MB.T).max())
print("smallest eigenvalue:", np.linalg.eigvalsh(0.5 * (MB + MB.T)).min())

# invert c0 I + B for a right-hand side
q = ops.solve_c0_plus_B(p, c0=0.1)
print("|q|_L2 =", ops.l2_norm(q), " |q|_V =", ops.v_norm(q))
