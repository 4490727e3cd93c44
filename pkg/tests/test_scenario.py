import json

import numpy as np
import pytest

from biotpicard.errors import ConfigurationError
from biotpicard.permeability import PermeabilityLaw
from biotpicard.scenario import Scenario, expression_source, parse_scenario, scenario_from_dict

MINIMAL = {
    "dimension": 1, "n": 4, "T": 1.0, "dt": 0.25, "c0": 1.0,
    "law": {"kind": "constant", "k1": 1.0, "k2": 1.0, "value": 1.0},
    "sources": {"S": "sin(pi*x)"},
}


def test_minimal_file_gets_defaults(tmp_path):
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(MINIMAL))
    sc = parse_scenario(path)
    assert (sc.theta, sc.picard_tol, sc.max_iters, sc.linear_tol) == (1.0, 1e-8, 50, 1e-10)
    assert sc.initial_guess == "d0"
    assert sc.n_steps == 4
    assert np.allclose(sc.times, [0, 0.25, 0.5, 0.75, 1.0])
    assert expression_source(sc.S) == "sin(pi*x)"
    assert sc.F is None and sc.d0 is None


def test_bad_permeability_bounds_named():
    spec = dict(MINIMAL, law={"kind": "clamped-exponential", "k1": 2.0, "k2": 1.0, "k0": 1.0, "beta": 1.0})
    with pytest.raises(ConfigurationError, match="k2 >= k1"):
        scenario_from_dict(spec)


def test_dt_must_divide_T():
    with pytest.raises(ConfigurationError, match="does not divide"):
        scenario_from_dict(dict(MINIMAL, dt=0.3))


@pytest.mark.parametrize("patch", [
    {"colour": 1},
    {"sources": {"G": "x"}},
    {"solver": {"tol": 1e-3}},
    {"mms": {"q": "x"}},
    {"limit": {"ladder": [0.1]}},
])
def test_unknown_keys_rejected(patch):
    with pytest.raises(ConfigurationError, match="unknown keys"):
        scenario_from_dict({**MINIMAL, **patch})


@pytest.mark.parametrize("patch, message", [
    ({"c0": -1.0}, "c0"),
    ({"solver": {"theta": 0.0}}, "theta"),
    ({"solver": {"initial_guess": "random"}}, "initial_guess"),
    ({"n": 2.5}, "integer"),
    ({"sources": {"F": ["x", "y"]}}, "list of 1"),
    ({"sources": {"d0": "t*x"}}, "must not depend on t"),
    ({"snapshot_times": "end"}, "snapshot_times"),
])
def test_field_validation(patch, message):
    with pytest.raises(ConfigurationError, match=message):
        scenario_from_dict({**MINIMAL, **patch})


def test_missing_field():
    spec = dict(MINIMAL)
    del spec["dt"]
    with pytest.raises(ConfigurationError, match="'dt'"):
        scenario_from_dict(spec)


def test_json_error_has_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "dimension": 1,\n  "n": ,\n}')
    with pytest.raises(ConfigurationError, match="line 3"):
        parse_scenario(path)


def test_with_replaces_fields():
    sc = Scenario(1, 4, 1.0, 0.5, 1.0, PermeabilityLaw.constant(1.0))
    other = sc.with_(c0=0.0)
    assert other.c0 == 0.0 and sc.c0 == 1.0
