import numpy as np

from biotpicard import battery
from biotpicard.mesh import build_unit_mesh


def test_full_battery_passes():
    results = battery.run_battery(seed=42)
    failed = [(d, n, c.line()) for d, n, c in results if not c.passed]
    assert not failed
    assert {(d, n) for d, n, _ in results} == set(battery.BATTERY_MESHES)


def test_oracle_gradients_and_measures():
    corners = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    grads = battery._local_gradients(corners)
    assert np.allclose(grads, [[-0.5, -1.0], [0.5, 0.0], [0.0, 1.0]])
    assert battery._measure(corners) == 1.0


def test_battery_detects_a_broken_matrix(monkeypatch):
    from biotpicard import assembly
    original = assembly.assemble_mass
    monkeypatch.setattr(assembly, "assemble_mass", lambda mesh: 1.01 * original(mesh))
    checks = battery.check_assembly(build_unit_mesh(1, 4), np.random.default_rng(0))
    by_name = {c.name: c for c in checks}
    assert not by_name["oracle mass"].passed
    assert by_name["oracle stiffness"].passed
