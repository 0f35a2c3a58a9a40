"""Exact polynomials and rational functions over Q in named variables.

Ring arithmetic and gcd cancellation are delegated to sympy's sparse
ring/field elements over ``QQ`` (gmpy2-backed).  This module owns variable
naming, unification of variable sets, composition, and float evaluation.

Variable names follow ``<letters><index>[_<order>]``: ``v2`` is the second
field, ``v2_3`` its third x-derivative.  The same names double as jet
coordinates in :mod:`wdvvkit.algebra.jets`.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

from sympy.polys.domains import QQ
from sympy.polys.fields import FracField
from sympy.polys.orderings import lex

Scalar = Fraction
Number = Union[int, Fraction]

_NAME_RE = re.compile(r"^([A-Za-z]+)(\d+)(?:_(\d+))?$")


class UnknownVariableError(KeyError):
    pass


def jet_parts(name: str) -> tuple[str, int, int]:
    """Split ``'v2_3'`` into ``('v', 2, 3)``; the order defaults to 0."""
    m = _NAME_RE.match(name)
    if m is None:
        raise ValueError(f"malformed variable name {name!r}")
    return m.group(1), int(m.group(2)), int(m.group(3) or 0)


def jet_name(base: str, index: int, order: int = 0) -> str:
    return f"{base}{index}" if order == 0 else f"{base}{index}_{order}"


def var_key(name: str) -> tuple:
    m = _NAME_RE.match(name)
    if m is None:
        return (name, 0, 0)
    return (m.group(1), int(m.group(2)), int(m.group(3) or 0))


def as_scalar(value) -> Fraction:
    """Exact scalar from int, Fraction, gmpy2 mpq or a ``'p/q'`` string.

    Floats are rejected: every constant in this package is exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, float):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot use {value!r} as an exact scalar")


def _qq(value):
    c = as_scalar(value)
    return QQ(c.numerator, c.denominator)


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


@lru_cache(maxsize=None)
def _field(names: tuple[str, ...]) -> FracField:
    for name in names:
        if _NAME_RE.match(name) is None:
            raise ValueError(f"malformed variable name {name!r}")
    return FracField(names, QQ, lex)


def _merge_names(*groups: Iterable[str]) -> tuple[str, ...]:
    seen: set[str] = set()
    for g in groups:
        seen.update(g)
    return tuple(sorted(seen, key=var_key))


def _compile(poly, n: int):
    """Compile a PolyElement into a float function of an n-tuple."""
    terms = []
    for monom, coeff in poly.terms():
        factors = [repr(float(_to_fraction(coeff)))]
        for i, e in enumerate(monom):
            if e == 1:
                factors.append(f"x[{i}]")
            elif e > 1:
                factors.append(f"x[{i}]**{e}")
        terms.append("*".join(factors))
    body = " + ".join(terms) if terms else "0.0"
    return eval(f"lambda x: {body}", {"__builtins__": {}})  # noqa: S307 - numeric literals only


class Polynomial:
    """Sparse multivariate polynomial with exact rational coefficients."""

    __slots__ = ("_p",)

    def __init__(self, element):
        self._p = element

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(str(s) for s in self._p.ring.symbols)

    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return {m: _to_fraction(c) for m, c in self._p.terms()}

    def is_zero(self) -> bool:
        return not self._p

    def is_monomial(self) -> bool:
        return len(self._p.terms()) == 1

    @property
    def total_degree(self) -> int:
        return max((sum(m) for m in self._p.monoms()), default=0)

    def to_rational(self) -> "RationalFunction":
        K = _field(self.variables)
        return RationalFunction(K.new(self._p.set_ring(K.ring)))

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.to_rational() == other.to_rational()
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Polynomial({_format_poly(self._p)})"


def _format_poly(p) -> str:
    return str(p).replace("**", "^")


class RationalFunction:
    """A quotient of polynomials, kept gcd-reduced.

    Instances are immutable.  Binary operations between functions declared
    over different variable sets work over the union of the two sets.
    """

    __slots__ = ("_f", "_eval")

    def __init__(self, element):
        self._f = element
        self._eval = None

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value: Number, variables: Sequence[str] = ()) -> "RationalFunction":
        K = _field(tuple(sorted(set(variables), key=var_key)))
        return cls(K(_qq(value)))

    @classmethod
    def variable(cls, name: str, variables: Sequence[str] = ()) -> "RationalFunction":
        names = _merge_names([name], variables)
        K = _field(names)
        return cls(K.gens[names.index(name)])

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, ...], Number], variables: Sequence[str]) -> "RationalFunction":
        names = tuple(variables)
        if list(names) != sorted(names, key=var_key):
            order = sorted(range(len(names)), key=lambda i: var_key(names[i]))
            names = tuple(names[i] for i in order)
            terms = {tuple(m[i] for i in order): c for m, c in terms.items()}
        K = _field(names)
        ring = K.ring
        p = ring.from_dict({tuple(m): _qq(c) for m, c in terms.items() if c != 0})
        return cls(K.new(p))

    # -- structure --------------------------------------------------------
    @property
    def variables(self) -> tuple[str, ...]:
        """Declared variables (the ambient field), in canonical order."""
        return tuple(str(s) for s in self._f.field.symbols)

    @property
    def free_variables(self) -> tuple[str, ...]:
        """Variables that actually occur."""
        num, den = self._f.numer, self._f.denom
        out = []
        for i, name in enumerate(self.variables):
            if (num and num.degree(i) > 0) or den.degree(i) > 0:
                out.append(name)
        return tuple(out)

    @property
    def numerator(self) -> Polynomial:
        return Polynomial(self._f.numer)

    @property
    def denominator(self) -> Polynomial:
        return Polynomial(self._f.denom)

    def is_zero(self) -> bool:
        return not self._f.numer

    def is_constant(self) -> bool:
        return not self.free_variables

    def is_polynomial(self) -> bool:
        return self._f.denom.is_ground

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        num = self._f.numer.LC if self._f.numer else QQ(0)
        return _to_fraction(num) / _to_fraction(self._f.denom.LC)

    def with_variables(self, variables: Iterable[str]) -> "RationalFunction":
        """Re-declare over ``variables`` (must contain every free variable)."""
        names = _merge_names(variables)
        missing = set(self.free_variables) - set(names)
        if missing:
            raise UnknownVariableError(f"variables {sorted(missing)} would be dropped")
        return RationalFunction(self._f.set_field(_field(names)))

    def _unify(self, other: "RationalFunction"):
        if self._f.field == other._f.field:
            return self._f, other._f
        K = _field(_merge_names(self.variables, other.variables))
        return self._f.set_field(K), other._f.set_field(K)

    def _coerce(self, other):
        if isinstance(other, RationalFunction):
            return self._unify(other)
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._f, self._f.field(_qq(other))
        return None

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return RationalFunction(pair[0] + pair[1])

    __radd__ = __add__

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return RationalFunction(pair[0] - pair[1])

    def __rsub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return RationalFunction(pair[1] - pair[0])

    def __mul__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return RationalFunction(pair[0] * pair[1])

    __rmul__ = __mul__

    def __truediv__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        if not pair[1].numer:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(pair[0] / pair[1])

    def __rtruediv__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        if not pair[0].numer:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(pair[1] / pair[0])

    def __neg__(self):
        return RationalFunction(-self._f)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0 and self.is_zero():
            raise ZeroDivisionError("negative power of zero")
        return RationalFunction(self._f ** k)

    def __eq__(self, other) -> bool:
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return not (pair[0] - pair[1]).numer

    __hash__ = None  # type: ignore[assignment]

    # -- calculus ---------------------------------------------------------
    def diff(self, var: str) -> "RationalFunction":
        names = self.variables
        if var not in names:
            raise UnknownVariableError(f"{var!r} is not a declared variable of this function")
        return RationalFunction(self._f.diff(self._f.field.gens[names.index(var)]))

    def subs(self, bindings: Mapping[str, Union["RationalFunction", Number]]) -> "RationalFunction":
        """Exact composition: replace each bound variable by a function."""
        names = self.variables
        for key in bindings:
            if key not in names:
                raise UnknownVariableError(f"{key!r} is not a declared variable of this function")
        if not bindings:
            return self
        values = {
            k: v if isinstance(v, RationalFunction) else RationalFunction.constant(v)
            for k, v in bindings.items()
        }
        unbound = [x for x in names if x not in values]
        target = _field(_merge_names(unbound, *(v.variables for v in values.values())))
        ring = target.ring
        tnames = [str(s) for s in target.symbols]
        parts = {}
        for k, v in values.items():
            e = v._f.set_field(target)
            parts[names.index(k)] = (e.numer, e.denom)
        gen_of = {i: ring.gens[tnames.index(x)] for i, x in enumerate(names) if x not in values}
        num = _compose(self._f.numer, parts, gen_of, ring)
        den = _compose(self._f.denom, parts, gen_of, ring)
        if not den[0]:
            raise ZeroDivisionError("denominator vanishes identically after substitution")
        # num = N / Dn, den = M / Dm  (Dn, Dm products of binding denominators)
        return RationalFunction(target.new(num[0] * den[1]) / target.new(den[0] * num[1]))

    # -- evaluation -------------------------------------------------------
    def _evaluator(self):
        if self._eval is None:
            n = len(self.variables)
            self._eval = (_compile(self._f.numer, n), _compile(self._f.denom, n))
        return self._eval

    def evaluate(self, point: Mapping[str, complex]) -> float:
        names = self.variables
        free = set(self.free_variables)
        args = []
        for name in names:
            if name in point:
                args.append(point[name])
            elif name in free:
                raise UnknownVariableError(f"no value bound for {name!r}")
            else:
                args.append(0.0)
        num, den = self._evaluator()
        d = den(args)
        if d == 0:
            raise ZeroDivisionError(f"denominator of {self} vanishes at {dict(point)}")
        return num(args) / d

    def __call__(self, **point) -> float:
        return self.evaluate(point)

    # -- display ----------------------------------------------------------
    def __str__(self) -> str:
        num, den = self._f.numer, self._f.denom
        if den == 1:
            return _format_poly(num)
        # pull the rational content of the denominator into the numerator
        c = den.LC
        num, den = num.quo_ground(c), den.quo_ground(c)
        n_text = _format_poly(num)
        d_text = _format_poly(den)
        if den == 1:
            return n_text
        n_wrapped = n_text if len(num.terms()) == 1 and "/" not in n_text else f"({n_text})"
        return f"{n_wrapped}/({d_text})"

    def __repr__(self) -> str:
        return f"RationalFunction({self})"


def _compose(poly, parts, gen_of, ring):
    """Evaluate ``poly`` with some generators replaced by fractions p/q.

    Returns ``(N, D)`` with ``poly(...) = N / D`` and ``D`` the product of the
    binding denominators raised to the degree of each bound variable.
    """
    if not poly:
        return ring.zero, ring.one
    degs = {i: poly.degree(i) for i in parts}
    powers: dict = {}

    def pw(key, base, e):
        cache = powers.setdefault(key, [ring.one])
        while len(cache) <= e:
            cache.append(cache[-1] * base)
        return cache[e]

    total = ring.zero
    for monom, coeff in poly.terms():
        term = ring(coeff)
        for i, e in enumerate(monom):
            if i in parts:
                p, q = parts[i]
                term = term * pw(("p", i), p, e) * pw(("q", i), q, degs[i] - e)
            elif e:
                term = term * pw(("x", i), gen_of[i], e)
        total += term
    den = ring.one
    for i, (p, q) in parts.items():
        den = den * pw(("q", i), q, max(degs[i], 0))
    return total, den


RF = RationalFunction


def variables(*names: str) -> list[RationalFunction]:
    """Generators over the common field of ``names``."""
    return [RationalFunction.variable(n, names) for n in names]


def differentiate(e: RationalFunction, var: str) -> RationalFunction:
    return e.diff(var)


def substitute(e: RationalFunction, bindings: Mapping[str, Union[RationalFunction, Number]]) -> RationalFunction:
    return e.subs(bindings)


def determinant(matrix: Sequence[Sequence[RationalFunction]]) -> RationalFunction:
    """Exact determinant by cofactor expansion (intended for n <= 5)."""
    n = len(matrix)
    if n == 0:
        return RationalFunction.constant(1)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = None
    for j in range(n):
        entry = matrix[0][j]
        if isinstance(entry, RationalFunction) and entry.is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = entry * determinant(minor)
        term = term if j % 2 == 0 else -term
        total = term if total is None else total + term
    return total if total is not None else RationalFunction.constant(0)


def inverse(matrix: Sequence[Sequence[RationalFunction]]) -> list[list[RationalFunction]]:
    """Exact inverse via adjugate / determinant."""
    n = len(matrix)
    det = determinant(matrix)
    if det.is_zero():
        raise ZeroDivisionError("matrix is singular as a rational-function matrix")
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:i] + row[i + 1:] for k, row in enumerate(matrix) if k != j]
            cof = determinant(minor) if minor else RationalFunction.constant(1)
            out[i][j] = (cof if (i + j) % 2 == 0 else -cof) / det
    return out

