import numpy as np
import pytest
import sympy as sp

from biotpicard.errors import ConfigurationError
from biotpicard.expressions import VectorExpression, parse_expression


def test_evaluates_vocabulary():
    expr = parse_expression("sin(pi*x)*cos(y) + exp(-t) - x**2/2")
    pts = np.array([[0.25, 0.5], [0.75, 0.1]])
    x, y = pts[:, 0], pts[:, 1]
    expected = np.sin(np.pi * x) * np.cos(y) + np.exp(-0.3) - x ** 2 / 2
    assert np.allclose(expr(pts, 0.3), expected, rtol=0, atol=1e-15)


def test_constant_broadcasts():
    assert np.array_equal(parse_expression("2")(np.zeros((3, 1))), [2.0, 2.0, 2.0])
    assert np.array_equal(parse_expression(1.5)(np.zeros((2, 2))), [1.5, 1.5])


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "log(x)", "x if t else y", "z + 1",
                                  "sin(x, y)", "[1, 2]", "sin(", "True"])
def test_rejects_outside_vocabulary(text):
    with pytest.raises(ConfigurationError):
        parse_expression(text)


def test_sympy_conversion_agrees():
    expr = parse_expression("x*(1-x)*exp(2*t) + 3/4")
    x, t = sp.symbols("x t", real=True)
    fn = sp.lambdify((x, t), expr.to_sympy(), "numpy")
    pts = np.linspace(0, 1, 5)[:, None]
    assert np.allclose(fn(pts[:, 0], 0.4), expr(pts, 0.4), rtol=1e-15)


def test_time_dependence_and_vectors():
    assert parse_expression("t*x").uses_time()
    assert not parse_expression("x*y").uses_time()
    vec = VectorExpression(["x", "y*t"])
    out = vec(np.array([[0.2, 0.4]]), 2.0)
    assert out.shape == (1, 2)
    assert np.allclose(out, [[0.2, 0.8]])
    assert vec.uses_time()
