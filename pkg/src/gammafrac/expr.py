"""
Small arithmetic expression language used in scenario files.

Grammar: numbers, the variables passed to :func:`compile_expr` (``x``, ``y``
by default), ``+ - * /``, ``^`` for powers, parentheses and the functions
``step``, ``min``, ``max``, ``sqrt`` (plus ``abs``).  ``step(s)`` is 1 for
``s >= 0`` and 0 otherwise.  Expressions are parsed with :mod:`ast` and
evaluated over numpy arrays; nothing else is reachable.
"""

import ast
import operator

import numpy as np

from .errors import ConfigError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}

_FUNCS = {
    "step": lambda s: np.where(np.asarray(s) >= 0, 1.0, 0.0),
    "min": lambda *a: np.minimum.reduce(np.broadcast_arrays(*a)),
    "max": lambda *a: np.maximum.reduce(np.broadcast_arrays(*a)),
    "sqrt": np.sqrt,
    "abs": np.abs,
}


class Expr:
    """A compiled expression; call it with keyword arrays for each variable."""

    def __init__(self, source, variables=("x", "y")):
        self.source = str(source)
        self.variables = tuple(variables)
        try:
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {self.source!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ConfigError(f"bad literal in {self.source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in self.variables:
                raise ConfigError(f"unknown variable {node.id!r} in {self.source!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ConfigError(f"operator not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ConfigError(f"operator not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
                raise ConfigError(f"function not allowed in {self.source!r}")
            if not node.args:
                raise ConfigError(f"empty call in {self.source!r}")
            for a in node.args:
                self._check(a)
        else:
            raise ConfigError(f"construct {type(node).__name__} not allowed in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            val = self._eval(node.operand, env)
            return -val if isinstance(node.op, ast.USub) else val
        args = [self._eval(a, env) for a in node.args]
        return _FUNCS[node.func.id](*args)

    def _dual(self, node, env, nd):
        """Forward-mode evaluation: returns (value, derivatives with trailing axis nd)."""
        if isinstance(node, ast.Constant):
            return float(node.value), 0.0
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.UnaryOp):
            a, da = self._dual(node.operand, env, nd)
            return (-a, -da) if isinstance(node.op, ast.USub) else (a, da)
        if isinstance(node, ast.BinOp):
            a, da = self._dual(node.left, env, nd)
            b, db = self._dual(node.right, env, nd)
            A, B = np.asarray(a)[..., None], np.asarray(b)[..., None]
            op = type(node.op)
            if op is ast.Add:
                return a + b, da + db
            if op is ast.Sub:
                return a - b, da - db
            if op is ast.Mult:
                return a * b, da * B + A * db
            if op is ast.Div:
                return a / b, (da * B - A * db) / (B * B)
            val = np.power(a, b)
            if isinstance(node.right, ast.Constant) or not np.any(db):
                return val, B * np.power(A, B - 1.0) * da
            return val, np.asarray(val)[..., None] * (db * np.log(A) + B * da / A)
        name = node.func.id
        args = [self._dual(x, env, nd) for x in node.args]
        if name == "sqrt":
            a, da = args[0]
            r = np.sqrt(a)
            return r, da / (2.0 * np.asarray(r)[..., None])
        if name == "abs":
            a, da = args[0]
            return np.abs(a), np.sign(a)[..., None] * da
        if name == "step":
            a, _ = args[0]
            return _FUNCS["step"](a), 0.0
        vals = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v, _ in args])
        k = (np.argmin if name == "min" else np.argmax)(np.stack(vals), axis=0)
        val = np.take_along_axis(np.stack(vals), k[None], axis=0)[0]
        ders = np.stack([np.broadcast_to(d, val.shape + (nd,)) for _, d in args])
        der = np.take_along_axis(ders, k[None, ..., None], axis=0)[0]
        return val, der

    def value_and_grad(self, **values):
        """Value and partial derivatives (trailing axis ordered like ``variables``)."""
        nd = len(self.variables)
        env = {}
        arrs = {k: np.asarray(values[k], dtype=float) for k in self.variables}
        shape = np.broadcast_shapes(*(v.shape for v in arrs.values())) if arrs else ()
        for i, k in enumerate(self.variables):
            d = np.zeros(shape + (nd,))
            d[..., i] = 1.0
            env[k] = (np.broadcast_to(arrs[k], shape), d)
        with np.errstate(divide="ignore", invalid="ignore"):
            val, der = self._dual(self._tree, env, nd)
        val = np.broadcast_to(np.asarray(val, dtype=float), shape).copy()
        der = np.broadcast_to(np.asarray(der, dtype=float), shape + (nd,)).copy()
        return val, der

    def __call__(self, **values):
        env = {k: np.asarray(values[k], dtype=float) for k in self.variables}
        shape = np.broadcast_shapes(*(v.shape for v in env.values())) if env else ()
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._eval(self._tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def __repr__(self):
        return f"Expr({self.source!r})"


def compile_expr(source, variables=("x", "y")):
    if isinstance(source, Expr):
        return source
    if isinstance(source, (int, float)):
        source = repr(float(source))
    return Expr(source, variables)
