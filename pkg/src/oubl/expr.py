"""Small, safe arithmetic expressions in one variable ``t``.

Grammar: numbers, ``t``, the constants ``pi`` and ``e``, the operators
``+ - * / **``, comparisons (``< <= > >=``), and the functions

    exp ln log log1p expm1 sqrt abs sin cos tan sinh cosh tanh min max where

``log`` is the natural logarithm (alias of ``ln``).  ``where(c, a, b)``
selects ``a`` where the comparison ``c`` holds and ``b`` elsewhere, which
is how piecewise-smooth coefficients are written, e.g.
``where(t < 0.5, 1, 2*t)``.

Expressions are parsed with :mod:`ast` and compiled to a closure; no
``eval`` of user text takes place.
"""
import ast
import operator

import numpy as np

_FUNCS = {
    "exp": np.exp,
    "ln": np.log,
    "log": np.log,
    "log1p": np.log1p,
    "expm1": np.expm1,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "min": np.minimum,
    "max": np.maximum,
    "where": np.where,
}
_ARITY = {"min": 2, "max": 2, "where": 3}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_CMPOPS = {
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}


class ExpressionError(ValueError):
    """Raised for text outside the supported grammar."""


def _compile(node):
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        val = float(node.value)
        return lambda t: val
    if isinstance(node, ast.Name):
        if node.id == "t":
            return lambda t: t
        if node.id in _CONSTS:
            val = _CONSTS[node.id]
            return lambda t: val
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        inner = _compile(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda t: -inner(t)
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        lhs, rhs = _compile(node.left), _compile(node.right)
        return lambda t: op(lhs(t), rhs(t))
    if isinstance(node, ast.Compare) and len(node.ops) == 1 and type(node.ops[0]) in _CMPOPS:
        op = _CMPOPS[type(node.ops[0])]
        lhs, rhs = _compile(node.left), _compile(node.comparators[0])
        return lambda t: op(lhs(t), rhs(t))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in _FUNCS:
            raise ExpressionError(f"unknown function {name!r}")
        want = _ARITY.get(name, 1)
        if len(node.args) != want:
            raise ExpressionError(f"{name} takes {want} argument(s)")
        fn = _FUNCS[name]
        args = [_compile(a) for a in node.args]
        return lambda t: fn(*(a(t) for a in args))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


class Expression:
    """Vectorised callable built from an expression string.

    >>> Expression("exp(-t/2)")(0.0)
    1.0
    """

    def __init__(self, text):
        if not isinstance(text, str):
            text = repr(float(text))
        self.text = text
        try:
            tree = ast.parse(text.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        self._fn = _compile(tree)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self._fn(arr), dtype=float)
        out = np.broadcast_to(out, arr.shape)
        if out.ndim == 0:
            return float(out)
        return out.copy()

    def __repr__(self):
        return f"Expression({self.text!r})"

    def is_constant_zero(self):
        try:
            return float(ast.literal_eval(self.text.strip())) == 0.0
        except (ValueError, SyntaxError, TypeError):
            return False
