"""Differential (jet) expressions: rational functions of jets plus logarithms.

A :class:`JetExpression` is held in the normal form

    R + sum_i c_i log(K_i) + c_L * LOG_MINUS_ONE

with ``R`` a rational function of jet variables, ``K_i`` monic polynomials
(or positive rational constants) and ``c_i`` rational.  The form is closed
under sums, rational scaling, and the total derivative, which is all the
genus-expansion bookkeeping needs.  Products that would multiply a logarithm
by a non-constant factor are rejected.

``LOG_MINUS_ONE`` stands for log(-1) in a fixed but unspecified branch; real
evaluation refuses it, while :meth:`JetExpression.evaluate_difference`
cancels it.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Mapping, Sequence, Union

from .rational import RationalFunction, as_scalar, jet_name, jet_parts, var_key

LOG_MINUS_ONE = "LOG_MINUS_ONE"

Operand = Union["JetExpression", RationalFunction, int, Fraction]


class LogProductError(TypeError):
    """Raised for products that leave the log-linear normal form."""


def _as_rf(x) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    return RationalFunction.constant(as_scalar(x))


def _monic_split(poly_rf: RationalFunction) -> tuple[Fraction, RationalFunction]:
    """Write a polynomial as ``lc * monic``."""
    terms = poly_rf.numerator.terms()
    lead = max(terms)  # lex-leading monomial
    lc = terms[lead]
    return lc, poly_rf / lc


class JetExpression:
    __slots__ = ("rational", "logs", "log_minus_one")

    def __init__(self, rational: Operand = 0, logs: Iterable[tuple[RationalFunction, Fraction]] = (),
                 log_minus_one: Fraction | int = 0):
        self.rational = _as_rf(rational)
        merged: list[tuple[RationalFunction, Fraction]] = []
        for key, coeff in logs:
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            for i, (k2, c2) in enumerate(merged):
                if k2 == key:
                    merged[i] = (k2, c2 + coeff)
                    break
            else:
                merged.append((key, coeff))
        self.logs = tuple((k, c) for k, c in merged if c != 0)
        self.log_minus_one = Fraction(log_minus_one)

    # -- construction -----------------------------------------------------
    @classmethod
    def coerce(cls, x: Operand) -> "JetExpression":
        if isinstance(x, JetExpression):
            return x
        return cls(_as_rf(x))

    @classmethod
    def log(cls, arg: Operand) -> "JetExpression":
        """log of a rational function, split into monic polynomial parts."""
        arg = cls.coerce(arg)
        if not arg.is_rational():
            raise LogProductError("log of an expression containing logarithms")
        r = arg.rational
        if r.is_zero():
            raise ValueError("log of zero")
        logs: list[tuple[RationalFunction, Fraction]] = []
        minus = Fraction(0)
        for poly, sign in ((r.numerator.to_rational(), 1), (r.denominator.to_rational(), -1)):
            if poly.is_constant():
                lc, monic = poly.constant_value(), None
            else:
                lc, monic = _monic_split(poly)
                logs.append((monic, Fraction(sign)))
            if lc < 0:
                minus += sign
                lc = -lc
            if lc != 1:
                logs.append((RationalFunction.constant(lc), Fraction(sign)))
        return cls(0, logs, minus)

    # -- predicates -------------------------------------------------------
    def is_rational(self) -> bool:
        return not self.logs and self.log_minus_one == 0

    def is_zero(self) -> bool:
        return self.rational.is_zero() and self.log_minus_one == 0 and _logs_vanish(self.logs)

    def is_x_independent(self) -> bool:
        return total_x_derivative(self).is_zero()

    @property
    def free_variables(self) -> tuple[str, ...]:
        names = set(self.rational.free_variables)
        for key, _ in self.logs:
            names.update(key.free_variables)
        return tuple(sorted(names, key=var_key))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other: Operand) -> "JetExpression":
        o = JetExpression.coerce(other)
        return JetExpression(self.rational + o.rational, self.logs + o.logs,
                             self.log_minus_one + o.log_minus_one)

    __radd__ = __add__

    def __neg__(self) -> "JetExpression":
        return JetExpression(-self.rational, [(k, -c) for k, c in self.logs], -self.log_minus_one)

    def __sub__(self, other: Operand) -> "JetExpression":
        return self + (-JetExpression.coerce(other))

    def __rsub__(self, other: Operand) -> "JetExpression":
        return JetExpression.coerce(other) - self

    def _scale(self, c: Fraction) -> "JetExpression":
        return JetExpression(self.rational * c, [(k, v * c) for k, v in self.logs], self.log_minus_one * c)

    def __mul__(self, other: Operand) -> "JetExpression":
        o = JetExpression.coerce(other)
        if self.is_rational() and o.is_rational():
            return JetExpression(self.rational * o.rational)
        if o.is_rational() and o.rational.is_constant():
            return self._scale(o.rational.constant_value())
        if self.is_rational() and self.rational.is_constant():
            return o._scale(self.rational.constant_value())
        raise LogProductError("product of a logarithmic term with a non-constant factor")

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> "JetExpression":
        o = JetExpression.coerce(other)
        if not o.is_rational():
            raise LogProductError("division by a logarithmic term")
        if self.is_rational():
            return JetExpression(self.rational / o.rational)
        if o.rational.is_constant():
            return self._scale(1 / o.rational.constant_value())
        raise LogProductError("division of a logarithmic term by a non-constant factor")

    def __rtruediv__(self, other: Operand) -> "JetExpression":
        return JetExpression.coerce(other) / self

    def __pow__(self, k: int) -> "JetExpression":
        if not self.is_rational():
            raise LogProductError("power of a logarithmic term")
        return JetExpression(self.rational ** k)

    def __eq__(self, other) -> bool:
        try:
            return (self - JetExpression.coerce(other)).is_zero()
        except TypeError:
            return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point: Mapping[str, float], complex_mode: bool = False):
        value = self.rational.evaluate(point)
        for key, coeff in self.logs:
            arg = key.evaluate(point)
            if complex_mode:
                value = value + float(coeff) * cmath.log(arg)
            elif arg <= 0:
                raise ValueError(f"log of non-positive value {arg} (enable complex_mode)")
            else:
                value += float(coeff) * math.log(arg)
        if self.log_minus_one:
            if not complex_mode:
                raise ValueError("LOG_MINUS_ONE has no real value; compare differences instead")
            value = value + float(self.log_minus_one) * 1j * math.pi
        return value

    def evaluate_difference(self, p1: Mapping[str, float], p2: Mapping[str, float]) -> float:
        """``e(p1) - e(p2)``; constant log terms, including LOG_MINUS_ONE, cancel."""
        value = self.rational.evaluate(p1) - self.rational.evaluate(p2)
        for key, coeff in self.logs:
            if key.is_constant():
                continue
            a, b = key.evaluate(p1), key.evaluate(p2)
            if a == 0 or b == 0 or (a > 0) != (b > 0):
                raise ValueError("log argument changes sign between the two points")
            value += float(coeff) * math.log(a / b)
        return value

    # -- display ----------------------------------------------------------
    def __str__(self) -> str:
        parts = []
        if not self.rational.is_zero() or (not self.logs and not self.log_minus_one):
            parts.append(str(self.rational))
        for key, coeff in self.logs:
            parts.append(f"({coeff})*log({key})")
        if self.log_minus_one:
            parts.append(f"({self.log_minus_one})*{LOG_MINUS_ONE}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"JetExpression({self})"


def _logs_vanish(logs: Sequence[tuple[RationalFunction, Fraction]]) -> bool:
    """Exact test of sum c_i log K_i == 0 by exponentiating to integer powers."""
    if not logs:
        return True
    scale = lcm(*(c.denominator for _, c in logs))
    pos = RationalFunction.constant(1)
    neg = RationalFunction.constant(1)
    for key, coeff in logs:
        e = int(coeff * scale)
        if e > 0:
            pos = pos * key ** e
        else:
            neg = neg * key ** (-e)
    return pos == neg


# -- differential operators ----------------------------------------------

def _next_jet(name: str) -> str:
    base, idx, order = jet_parts(name)
    return jet_name(base, idx, order + 1)


def rational_x_derivative(r: RationalFunction) -> RationalFunction:
    total = RationalFunction.constant(0)
    for name in r.free_variables:
        total = total + r.diff(name) * RationalFunction.variable(_next_jet(name))
    return total


def total_x_derivative(e: Operand) -> JetExpression:
    """D_x = sum over jets u_k of (d/du_k) * u_{k+1}; logs by the chain rule."""
    e = JetExpression.coerce(e)
    out = rational_x_derivative(e.rational)
    for key, coeff in e.logs:
        if key.is_constant():
            continue
        out = out + coeff * rational_x_derivative(key) / key
    return JetExpression(out)


def partial(e: Operand, var: str) -> JetExpression:
    """Partial derivative with respect to a single jet coordinate."""
    e = JetExpression.coerce(e)

    def d(r: RationalFunction) -> RationalFunction:
        return r.diff(var) if var in r.variables else RationalFunction.constant(0)

    out = d(e.rational)
    for key, coeff in e.logs:
        out = out + coeff * d(key) / key
    return JetExpression(out)


def substitute_jets(e: Operand, bindings: Mapping[str, Operand]) -> JetExpression:
    """Replace jet coordinates by rational jet expressions."""
    e = JetExpression.coerce(e)
    rb = {}
    for k, v in bindings.items():
        v = JetExpression.coerce(v)
        if not v.is_rational():
            raise LogProductError("cannot substitute a logarithmic expression")
        rb[k] = v.rational

    def s(r: RationalFunction) -> RationalFunction:
        local = {k: v for k, v in rb.items() if k in r.variables}
        return r.subs(local) if local else r

    out = JetExpression(s(e.rational), log_minus_one=e.log_minus_one)
    for key, coeff in e.logs:
        out = out + JetExpression.log(s(key)) * coeff
    return out


def jet_orders(e: Operand) -> dict[tuple[str, int], int]:
    """Highest derivative order of each field ``(base, index)`` present."""
    out: dict[tuple[str, int], int] = {}
    for name in JetExpression.coerce(e).free_variables:
        base, idx, order = jet_parts(name)
        out[(base, idx)] = max(out.get((base, idx), 0), order)
    return out


def pullback_jets(e: Operand, fields: Mapping[tuple[str, int], Operand],
                  dx: Callable[[JetExpression], JetExpression]) -> JetExpression:
    """Change of dependent and independent variable on jets.

    ``fields[(base, i)]`` gives the order-0 value of each target field in
    source jets, and ``dx`` the target x-derivative acting on source jets.
    Higher jets are generated by repeated ``dx``.
    """
    e = JetExpression.coerce(e)
    need = jet_orders(e)
    bindings: dict[str, JetExpression] = {}
    for (base, idx), top in need.items():
        if (base, idx) not in fields:
            continue
        cur = JetExpression.coerce(fields[(base, idx)])
        for k in range(top + 1):
            bindings[jet_name(base, idx, k)] = cur
            if k < top:
                cur = dx(cur)
    return substitute_jets(e, bindings)


def evolutionary_derivative(e: Operand, velocity: Mapping[tuple[str, int], Operand]) -> JetExpression:
    """Prolonged derivative along the flow u_t = velocity[u] on jet space."""
    e = JetExpression.coerce(e)
    out = JetExpression(0)
    for name in e.free_variables:
        base, idx, order = jet_parts(name)
        if (base, idx) not in velocity:
            continue
        d = partial(e, name)
        if d.is_zero():
            continue
        flow = JetExpression.coerce(velocity[(base, idx)])
        for _ in range(order):
            flow = total_x_derivative(flow)
        out = out + d * flow
    return out


def evaluate(e, point: Mapping[str, float], complex_mode: bool = False):
    if isinstance(e, RationalFunction):
        return e.evaluate(point)
    return JetExpression.coerce(e).evaluate(point, complex_mode=complex_mode)
