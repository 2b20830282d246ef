"""Small arithmetic expression language over point coordinates.

Grammar: +, -, *, /, ^ (power), unary minus, the functions sin, cos, exp,
log, abs, sqrt, min, max, numeric constants, pi, e, and the coordinate
names x1..x9.  Comparisons (<, <=, >, >=) and and/or are allowed so mask
predicates can be written directly.  Expressions compile to vectorized
evaluators over coordinate arrays of shape (..., n).  Vector-valued
expressions are comma-separated component lists.
"""

from __future__ import annotations

import ast
import re

import numpy as np


class ExprError(ValueError):
    """Parse or evaluation failure, with a column offset when available."""

    def __init__(self, message: str, col: int | None = None):
        super().__init__(message)
        self.col = col


_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
    "sqrt": np.sqrt,
}

_CONSTS = {"pi": np.pi, "e": np.e}

_COORD_RE = re.compile(r"^x([1-9])$")


class Expr:
    """One compiled scalar-valued expression."""

    def __init__(self, text: str, tree: ast.expression):
        self.text = text
        self._tree = tree

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self._eval(self._tree, points)

    def _eval(self, node, points):
        ndim = points.shape[-1]
        if isinstance(node, ast.Expression):
            return self._eval(node.body, points)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)):
                return np.full(points.shape[:-1], float(node.value))
            raise ExprError(f"unsupported constant {node.value!r}", node.col_offset)
        if isinstance(node, ast.Name):
            m = _COORD_RE.match(node.id)
            if m:
                k = int(m.group(1)) - 1
                if k >= ndim:
                    raise ExprError(
                        f"coordinate {node.id} exceeds dimension {ndim}", node.col_offset
                    )
                return points[..., k]
            if node.id in _CONSTS:
                return np.full(points.shape[:-1], _CONSTS[node.id])
            raise ExprError(f"unknown name {node.id!r}", node.col_offset)
        if isinstance(node, ast.UnaryOp):
            val = self._eval(node.operand, points)
            if isinstance(node.op, ast.USub):
                return -val
            if isinstance(node.op, ast.UAdd):
                return val
            raise ExprError("unsupported unary operator", node.col_offset)
        if isinstance(node, ast.BinOp):
            lhs = self._eval(node.left, points)
            rhs = self._eval(node.right, points)
            if isinstance(node.op, ast.Add):
                return lhs + rhs
            if isinstance(node.op, ast.Sub):
                return lhs - rhs
            if isinstance(node.op, ast.Mult):
                return lhs * rhs
            if isinstance(node.op, ast.Div):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return lhs / rhs
            if isinstance(node.op, ast.Pow):
                return lhs**rhs
            raise ExprError("unsupported binary operator", node.col_offset)
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name):
                raise ExprError("only plain function calls allowed", node.col_offset)
            name = node.func.id
            args = [self._eval(a, points) for a in node.args]
            if name in ("min", "max"):
                if len(args) < 2:
                    raise ExprError(f"{name} needs at least two arguments", node.col_offset)
                op = np.minimum if name == "min" else np.maximum
                out = args[0]
                for a in args[1:]:
                    out = op(out, a)
                return out
            if name in _FUNCS:
                if len(args) != 1:
                    raise ExprError(f"{name} takes one argument", node.col_offset)
                with np.errstate(divide="ignore", invalid="ignore"):
                    return _FUNCS[name](args[0])
            raise ExprError(f"unknown function {name!r}", node.col_offset)
        if isinstance(node, ast.Compare):
            if len(node.ops) != 1:
                raise ExprError("chained comparisons not allowed", node.col_offset)
            lhs = self._eval(node.left, points)
            rhs = self._eval(node.comparators[0], points)
            op = node.ops[0]
            if isinstance(op, ast.LtE):
                return lhs <= rhs
            if isinstance(op, ast.Lt):
                return lhs < rhs
            if isinstance(op, ast.GtE):
                return lhs >= rhs
            if isinstance(op, ast.Gt):
                return lhs > rhs
            raise ExprError("unsupported comparison", node.col_offset)
        if isinstance(node, ast.BoolOp):
            vals = [self._eval(v, points) for v in node.values]
            op = np.logical_and if isinstance(node.op, ast.And) else np.logical_or
            out = vals[0]
            for v in vals[1:]:
                out = op(out, v)
            return out
        raise ExprError(
            f"unsupported syntax {type(node).__name__}", getattr(node, "col_offset", None)
        )


def parse_expr(text: str) -> Expr:
    """Compile one scalar expression; '^' is accepted for power."""
    cooked = text.replace("^", "**")
    try:
        tree = ast.parse(cooked, mode="eval")
    except SyntaxError as exc:
        raise ExprError(f"syntax error: {exc.msg}", exc.offset) from None
    expr = Expr(text, tree)
    # validate node types eagerly on a probe point so errors surface at parse time
    try:
        expr(np.zeros((1, 9)))
    except ExprError:
        raise
    except FloatingPointError:
        pass
    return expr


class VectorExpr:
    """Comma-separated list of component expressions."""

    def __init__(self, components: list[Expr]):
        self.components = components

    @property
    def ncomp(self) -> int:
        return len(self.components)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.stack([c(points) for c in self.components], axis=-1)


def _split_components(text: str) -> list[str]:
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_vector_expr(text: str) -> VectorExpr:
    """Compile a vector expression from top-level comma-separated parts."""
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        inner = text[1:-1]
        if _balanced(inner):
            text = inner
    parts = [p.strip() for p in _split_components(text)]
    if any(not p for p in parts):
        raise ExprError("empty component in vector expression")
    return VectorExpr([parse_expr(p) for p in parts])


def _balanced(text: str) -> bool:
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth < 0:
            return False
    return depth == 0
