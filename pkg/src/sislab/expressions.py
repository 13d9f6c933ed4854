"""Tiny arithmetic expression evaluator for coefficient profiles.

Scenario files may give a coefficient as a string in the cell-center
coordinates, e.g. "1.5 + 0.5*sin(3.14159*x)".  The accepted grammar is
deliberately small: the names x (and y in 2d), numeric literals, + - * /,
unary minus, parentheses, and the functions sin, cos, exp.  Anything else is
rejected at parse time with the offending source position, so a typo in a
scenario fails loudly instead of materializing a silently wrong field.

Evaluation walks the (validated) ast and applies numpy ufuncs, so an
expression evaluates on whole coordinate arrays at once.
"""

from __future__ import annotations

import ast

import numpy as np

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}


class ExpressionError(ValueError):
    """Parse or validation failure, carrying the source position."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (column {position})"
        super().__init__(message)


def _fail(node: ast.AST, message: str):
    raise ExpressionError(message, getattr(node, "col_offset", None))


def parse_expression(source: str, names: tuple[str, ...]):
    """Compile a coefficient expression into eval(coords) -> array.

    names lists the coordinate names admissible on the target grid ("x",) or
    ("x", "y").  Returns a closure taking a dict of coordinate arrays.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as err:
        raise ExpressionError(f"syntax error: {err.msg}", err.offset) from None

    def check(node: ast.AST):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                _fail(node, f"operator {type(node.op).__name__} not allowed")
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                _fail(node, f"operator {type(node.op).__name__} not allowed")
            check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                _fail(node, "only sin, cos, exp may be called")
            if len(node.args) != 1 or node.keywords:
                _fail(node, f"{node.func.id} takes exactly one argument")
            check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id not in names:
                _fail(node, f"unknown name '{node.id}', allowed: {', '.join(names)}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                _fail(node, f"literal {node.value!r} is not numeric")
        else:
            _fail(node, f"{type(node).__name__} not allowed in expressions")

    check(tree)

    def evaluate(coords: dict[str, np.ndarray]):
        def walk(node):
            if isinstance(node, ast.Expression):
                return walk(node.body)
            if isinstance(node, ast.BinOp):
                return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
            if isinstance(node, ast.UnaryOp):
                v = walk(node.operand)
                return -v if isinstance(node.op, ast.USub) else +v
            if isinstance(node, ast.Call):
                return _FUNCTIONS[node.func.id](walk(node.args[0]))
            if isinstance(node, ast.Name):
                return coords[node.id]
            return float(node.value)

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.asarray(walk(tree), dtype=float)

    return evaluate
