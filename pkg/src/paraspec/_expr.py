"""Whitelisted expression evaluator for spatial profiles in config files.

Grammar: numeric literals, the variable ``x``, the constant ``pi``, the
functions sin/cos/exp, and the operators + - * / ** with unary sign.  Anything
else is rejected, so config files stay declarative and portable.
"""

from __future__ import annotations

import ast

import numpy as np

from .errors import ConfigurationError

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_NAMES = {"pi": np.pi}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _eval_node(node, x):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, x)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise ConfigurationError(f"literal {node.value!r} is not a number")
    if isinstance(node, ast.Name):
        if node.id == "x":
            return x
        if node.id in _NAMES:
            return _NAMES[node.id]
        raise ConfigurationError(f"unknown name {node.id!r} (allowed: x, pi)")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left, x), _eval_node(node.right, x))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        val = _eval_node(node.operand, x)
        return val if isinstance(node.op, ast.UAdd) else -val
    if isinstance(node, ast.Call):
        if (isinstance(node.func, ast.Name) and node.func.id in _FUNCTIONS
                and len(node.args) == 1 and not node.keywords):
            return _FUNCTIONS[node.func.id](_eval_node(node.args[0], x))
        name = getattr(node.func, "id", "<expr>")
        raise ConfigurationError(
            f"call to {name!r} not allowed (allowed: sin, cos, exp with one argument)")
    raise ConfigurationError(f"unsupported syntax {type(node).__name__!r} in expression")


def eval_profile_expr(expr: str, x: np.ndarray) -> np.ndarray:
    """Evaluate a whitelisted expression of x on the given nodes."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {expr!r}: {exc.msg}") from exc
    value = _eval_node(tree, np.asarray(x, dtype=float))
    out = np.broadcast_to(np.asarray(value, dtype=float), np.shape(x)).copy()
    if not np.all(np.isfinite(out)):
        raise ConfigurationError(f"expression {expr!r} produced non-finite values")
    return out
