"""Small arithmetic grammar for user supplied spherical profiles.

Grammar: numbers, ``+ - * / ^`` (``**`` also accepted), unary minus,
parentheses, the functions ``sin cos tan exp log sqrt pow abs`` and the
constants ``pi`` and ``e``.  Variables are the spherical angles ``theta``
(polar angle from the z axis in R^3, planar angle in R^2), ``phi``
(azimuth in R^3, zero in R^2) and the unit-vector coordinates ``x y z``.

Parsing leans on :mod:`ast`; only a whitelisted node set is accepted and
every error carries the character offset into the original string.
"""
from __future__ import annotations

import ast
from typing import Callable, Mapping

import numpy as np

from .errors import ExpressionError

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "pow": np.power,
    "abs": np.abs,
}
CONSTANTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("theta", "phi", "x", "y", "z")

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _translate(source: str) -> tuple[str, list[int]]:
    """Rewrite ``^`` as ``**``; return the new text and an offset map back to ``source``."""
    out: list[str] = []
    back: list[int] = []
    for i, ch in enumerate(source):
        if ch == "^":
            out.append("**")
            back.extend([i, i])
        else:
            out.append(ch)
            back.append(i)
    back.append(len(source))
    return "".join(out), back


class Expression:
    """A parsed profile expression.

    :param source: formula text, e.g. ``"1 + 0.2*cos(theta)^2"``
    """

    def __init__(self, source: str):
        if not isinstance(source, str) or not source.strip():
            raise ExpressionError("empty expression", 0)
        self.source = source
        text, self._back = _translate(source)
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            col = (exc.offset or 1) - 1
            col = min(max(col, 0), len(self._back) - 1)
            raise ExpressionError(f"syntax error: {exc.msg}", self._back[col]) from None
        self._check(tree.body)
        self._tree = tree.body
        self.variables = sorted(
            {n.id for n in ast.walk(tree) if isinstance(n, ast.Name) and n.id in VARIABLES}
        )

    def _offset(self, node: ast.AST) -> int:
        col = getattr(node, "col_offset", 0)
        return self._back[min(col, len(self._back) - 1)]

    def _check(self, node: ast.AST) -> None:
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError("unsupported operator", self._offset(node))
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError("unsupported unary operator", self._offset(node))
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError("unknown function", self._offset(node))
            if node.keywords:
                raise ExpressionError("keyword arguments are not allowed", self._offset(node))
            want = 2 if node.func.id == "pow" else 1
            if len(node.args) != want:
                raise ExpressionError(
                    f"{node.func.id} takes {want} argument(s)", self._offset(node)
                )
            for a in node.args:
                self._check(a)
        elif isinstance(node, ast.Name):
            if node.id not in VARIABLES and node.id not in CONSTANTS:
                raise ExpressionError(f"unknown name '{node.id}'", self._offset(node))
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError("only numeric literals are allowed", self._offset(node))
        else:
            raise ExpressionError("unsupported syntax", self._offset(node))

    def _eval(self, node: ast.AST, env: Mapping[str, np.ndarray]):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](*(self._eval(a, env) for a in node.args))
        if isinstance(node, ast.Name):
            if node.id in CONSTANTS:
                return CONSTANTS[node.id]
            return env[node.id]
        return float(node.value)

    def __call__(self, **env) -> np.ndarray:
        missing = [v for v in self.variables if v not in env]
        if missing:
            raise ExpressionError(f"no value for variable '{missing[0]}'", 0)
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        shape = np.broadcast(*[np.asarray(v) for v in env.values()]).shape if env else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"


def parse(source: str) -> Expression:
    """Parse ``source`` into an evaluable :class:`Expression`."""
    return Expression(source)
