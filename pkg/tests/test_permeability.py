import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from biotpicard.errors import ConfigurationError
from biotpicard.permeability import PermeabilityLaw, shipped_laws

finite = st.floats(-50, 50, allow_nan=False)


def test_bounds_validation():
    with pytest.raises(ConfigurationError, match="k2 >= k1"):
        PermeabilityLaw.clamped_exponential(2.0, 1.0)
    with pytest.raises(ConfigurationError):
        PermeabilityLaw.constant(0.0)
    with pytest.raises(ConfigurationError):
        PermeabilityLaw("cubic", 1.0, 2.0)


def test_clamped_exponential_saturates():
    law = PermeabilityLaw.clamped_exponential(0.5, 2.0, 1.0, 1.0)
    assert law(np.array([100.0]))[0] == 2.0
    assert law(np.array([-100.0]))[0] == 0.5
    assert law(np.array([0.0]))[0] == 1.0


@given(st.sampled_from(sorted(shipped_laws())), st.lists(finite, min_size=1, max_size=20))
def test_values_within_bounds(name, xs):
    law = shipped_laws()[name]
    values = law(np.array(xs))
    assert np.all(values >= law.k1) and np.all(values <= law.k2)


@given(st.sampled_from(sorted(shipped_laws())), finite, finite)
def test_lipschitz_bound_holds(name, a, b):
    law = shipped_laws()[name]
    gap = abs(law(np.array([a]))[0] - law(np.array([b]))[0])
    assert gap <= law.lipschitz_constant * abs(a - b) * (1 + 1e-12) + 1e-15


def test_lipschitz_constants():
    assert PermeabilityLaw.constant(3.0).lipschitz_constant == 0.0
    assert PermeabilityLaw.clamped_exponential(0.5, 2.0, 1.0, -3.0).lipschitz_constant == 6.0
    assert PermeabilityLaw.logistic(1.0, 3.0, 2.0).lipschitz_constant == 1.0
    assert PermeabilityLaw.table([0, 1, 2], [1, 3, 2]).lipschitz_constant == 2.0


def test_table_validation():
    with pytest.raises(ConfigurationError):
        PermeabilityLaw.table([0, 0], [1, 2])
    with pytest.raises(ConfigurationError):
        PermeabilityLaw.table([0], [1])


@pytest.mark.parametrize("name", ["constant", "clamped-exponential", "logistic"])
def test_symbolic_matches_numeric(name):
    law = shipped_laws()[name]
    x = sp.Symbol("x", real=True)
    fn = sp.lambdify(x, law.symbolic(x), "numpy")
    pts = np.linspace(-3, 3, 41)
    assert np.allclose(np.broadcast_to(fn(pts), pts.shape), law(pts), rtol=1e-14)


def test_dict_round_trip():
    for law in shipped_laws().values():
        back = PermeabilityLaw.from_dict(law.to_dict())
        pts = np.linspace(-2, 2, 9)
        assert np.array_equal(back(pts), law(pts))
        assert back.k1 == law.k1 and back.k2 == law.k2
    with pytest.raises(ConfigurationError):
        PermeabilityLaw.from_dict({"kind": "constant", "k1": 1, "k2": 1, "value": 1, "slope": 2})
