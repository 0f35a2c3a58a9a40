"""Parser for the expression text grammar.

Grammar: variables ``v1..vN`` (any ``<letters><index>[_<order>]`` name when
no variable list is given), integers, rationals ``p/q``, ``+ - * / ^`` and
parentheses.  ``log(...)`` is accepted only when parsing jet expressions.
Floating point literals are rejected.
"""

from __future__ import annotations

import ast
from fractions import Fraction
from typing import Sequence

from .jets import LOG_MINUS_ONE, JetExpression
from .rational import RationalFunction, _NAME_RE


class ExpressionError(ValueError):
    def __init__(self, message: str, text: str = "", col: int | None = None):
        where = f" at column {col + 1}" if col is not None else ""
        super().__init__(f"{message}{where}: {text!r}" if text else message)
        self.col = col


_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def _parse(text: str, variables: Sequence[str] | None, allow_log: bool):
    source = text.strip().replace("^", "**")
    if not source:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError("syntax error", text, (exc.offset or 1) - 1) from None
    declared = tuple(variables) if variables is not None else None

    def const(node) -> Fraction | None:
        value = walk(node)
        if isinstance(value, Fraction):
            return value
        if isinstance(value, RationalFunction) and value.is_constant():
            return value.constant_value()
        return None

    def walk(node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise ExpressionError(f"only integer literals are allowed, got {node.value!r}", text, node.col_offset)
            return Fraction(node.value)
        if isinstance(node, ast.Name):
            name = node.id
            if name == LOG_MINUS_ONE and allow_log:
                return JetExpression(0, log_minus_one=1)
            if _NAME_RE.match(name) is None:
                raise ExpressionError(f"malformed variable {name!r}", text, node.col_offset)
            if declared is not None and name not in declared:
                raise ExpressionError(f"unknown variable {name!r}", text, node.col_offset)
            return RationalFunction.variable(name, declared or ())
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = walk(node.operand)
            return -inner if isinstance(node.op, ast.USub) else inner
        if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
            if isinstance(node.op, ast.Pow):
                base = walk(node.left)
                exp = const(node.right)
                if exp is None or exp.denominator != 1:
                    raise ExpressionError("exponents must be integer constants", text, node.right.col_offset)
                return base ** int(exp)
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(right, Fraction) and right == 0:
                raise ExpressionError("division by zero", text, node.right.col_offset)
            if isinstance(left, Fraction) and isinstance(right, Fraction):
                return left / right
            return _div(left, right)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "log":
            if not allow_log:
                raise ExpressionError("log is not allowed here", text, node.col_offset)
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError("log takes one argument", text, node.col_offset)
            return JetExpression.log(walk(node.args[0]))
        raise ExpressionError(f"unsupported syntax {type(node).__name__}", text, getattr(node, "col_offset", None))

    return walk(tree.body)


def _div(left, right):
    if isinstance(right, JetExpression) or isinstance(left, JetExpression):
        return JetExpression.coerce(left) / right
    if isinstance(left, Fraction):
        return RationalFunction.constant(left) / right
    return left / right


def parse_expression(text: str, variables: Sequence[str] | None = None) -> RationalFunction:
    """Parse a rational function (no logarithms)."""
    value = _parse(text, variables, allow_log=False)
    if isinstance(value, Fraction):
        return RationalFunction.constant(value, variables or ())
    if variables is not None:
        value = value.with_variables(set(variables) | set(value.variables))
    return value


def parse_jet(text: str, variables: Sequence[str] | None = None) -> JetExpression:
    """Parse a jet expression; ``log(...)`` and ``LOG_MINUS_ONE`` allowed."""
    value = _parse(text, variables, allow_log=True)
    if isinstance(value, Fraction):
        return JetExpression(RationalFunction.constant(value))
    return JetExpression.coerce(value)


def parse_rational(text: str) -> Fraction:
    """Exact rational literal ``p`` or ``p/q`` (no floats)."""
    value = _parse(text, (), allow_log=False)
    if isinstance(value, RationalFunction):
        value = value.constant_value()
    return value
