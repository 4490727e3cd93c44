"""Closed-form source expressions in ``x``, ``y``, ``t``.

The vocabulary is deliberately small: numbers, ``pi``, the variables,
``+ - * / **``, and ``sin``, ``cos``, ``exp``.  Strings are parsed with
:mod:`ast` into a tree that is evaluated with numpy or converted to sympy;
nothing is passed to ``eval``.
"""

import ast
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .errors import ConfigurationError

FUNCTIONS = {"sin": (np.sin, sp.sin), "cos": (np.cos, sp.cos), "exp": (np.exp, sp.exp)}
VARIABLES = ("x", "y", "t")
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


@dataclass(frozen=True)
class Expression:
    """Parsed expression; call with coordinate arrays and a time."""

    source: str
    tree: ast.AST

    def __call__(self, points, t=0.0):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        env = {"x": points[:, 0], "t": float(t)}
        env["y"] = points[:, 1] if points.shape[1] > 1 else np.zeros(points.shape[0])
        value = _eval_numpy(self.tree, env)
        return np.broadcast_to(np.asarray(value, dtype=float), (points.shape[0],)).copy()

    def to_sympy(self, symbols=None):
        symbols = symbols or {name: sp.Symbol(name, real=True) for name in VARIABLES}
        return _eval_sympy(self.tree, symbols)

    def uses_time(self):
        return any(isinstance(n, ast.Name) and n.id == "t" for n in ast.walk(self.tree))


def parse_expression(text):
    """Parse ``text`` into an :class:`Expression`, validating the vocabulary."""
    if isinstance(text, (int, float)):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ConfigurationError(f"expression must be a string or number, got {type(text).__name__}")
    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {text!r}: {exc.msg}") from None
    _validate(tree, text)
    return Expression(text, tree)


def _validate(node, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return
    if isinstance(node, ast.Name) and (node.id in VARIABLES or node.id == "pi"):
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left, text)
        _validate(node.right, text)
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _validate(node.operand, text)
        return
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in FUNCTIONS and len(node.args) == 1 and not node.keywords):
        _validate(node.args[0], text)
        return
    raise ConfigurationError(f"unsupported construct {ast.dump(node)[:40]!r} in expression {text!r}")


def _eval_numpy(node, env):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return np.pi if node.id == "pi" else env[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval_numpy(node.left, env), _eval_numpy(node.right, env))
    if isinstance(node, ast.UnaryOp):
        value = _eval_numpy(node.operand, env)
        return -value if isinstance(node.op, ast.USub) else value
    return FUNCTIONS[node.func.id][0](_eval_numpy(node.args[0], env))


def _eval_sympy(node, symbols):
    if isinstance(node, ast.Constant):
        return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)
    if isinstance(node, ast.Name):
        return sp.pi if node.id == "pi" else symbols[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval_sympy(node.left, symbols), _eval_sympy(node.right, symbols))
    if isinstance(node, ast.UnaryOp):
        value = _eval_sympy(node.operand, symbols)
        return -value if isinstance(node.op, ast.USub) else value
    return FUNCTIONS[node.func.id][1](_eval_sympy(node.args[0], symbols))


class VectorExpression:
    """Tuple of component expressions evaluated to shape (n_points, d)."""

    def __init__(self, components):
        self.components = [c if isinstance(c, Expression) else parse_expression(c) for c in components]

    def __call__(self, points, t=0.0):
        return np.column_stack([c(points, t) for c in self.components])

    def uses_time(self):
        return any(c.uses_time() for c in self.components)
