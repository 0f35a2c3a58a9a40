"""The operators L_{-1} and L_0, constraint residuals on genus-zero tau
functions, and the commutation relation ``[L_{-1}, L_0] = -L_{-1}``."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Mapping, Sequence

from .calibration import Calibration, LevelError, Matrix, OmegaTable
from .frobenius import antidiagonal
from .hierarchy import TimeConfiguration, dlogtau

Key = tuple[int, int]
Pair = tuple[Key, Key]


class VirasoroError(ValueError):
    pass


@dataclass(frozen=True)
class VirasoroOperator:
    """``sum a d d + sum b t^{src} d_{dst} + sum c2 t t + c0``, truncated at ``level``.

    ``b`` maps ``(src, dst)`` to the coefficient of ``t^{src} d/dt^{dst}``;
    ``c2`` maps ``(k1, k2)`` to the coefficient of ``t^{k1} t^{k2}`` (ordered pairs).
    """

    m: int
    level: int
    a: Mapping[Pair, Fraction] = field(default_factory=dict)
    b: Mapping[Pair, Fraction] = field(default_factory=dict)
    c2: Mapping[Pair, Fraction] = field(default_factory=dict)
    c0: Fraction = Fraction(0)


def virasoro_operator(m: int, mu: Sequence[Fraction], R: Mapping[int, Matrix], level: int,
                      *, diagonal_shift: Fraction = Fraction(1, 2)) -> VirasoroOperator:
    """Coefficient tables of ``L_m`` for ``m`` in {-1, 0}.

    ``diagonal_shift`` is the 1/2 in ``p + 1/2 + mu``; it is a parameter only
    so negative controls can break it.
    """
    n = len(mu)
    eta = antidiagonal(n)
    b: dict[Pair, Fraction] = defaultdict(Fraction)
    c2: dict[Pair, Fraction] = defaultdict(Fraction)
    if m == -1:
        for a, p in product(range(1, n + 1), range(1, level + 1)):
            b[((a, p), (a, p - 1))] += 1
        for a, c in product(range(1, n + 1), repeat=2):
            if eta[a - 1][c - 1]:
                c2[((a, 0), (c, 0))] += Fraction(1, 2) * eta[a - 1][c - 1]
        c0 = Fraction(0)
    elif m == 0:
        for a, p in product(range(1, n + 1), range(level + 1)):
            b[((a, p), (a, p))] += p + diagonal_shift + mu[a - 1]
            for r in range(1, p + 1):
                Rr = R.get(r)
                if Rr is None:
                    continue
                for c in range(1, n + 1):
                    if Rr[c - 1][a - 1]:
                        b[((a, p), (c, p - r))] += Rr[c - 1][a - 1]
        for (a, p), (c, q) in product(product(range(1, n + 1), range(level + 1)), repeat=2):
            Rk = R.get(p + q + 1)
            if Rk is None:
                continue
            val = sum(Rk[x][a - 1] * eta[x][c - 1] for x in range(n))
            if val:
                c2[((a, p), (c, q))] += Fraction(1, 2) * (-1) ** q * val
        c0 = Fraction(1, 4) * sum(Fraction(1, 4) - x * x for x in mu)
    else:
        raise VirasoroError("only L_{-1} and L_0 are available")
    return VirasoroOperator(m, level, {}, {k: v for k, v in b.items() if v},
                            {k: v for k, v in c2.items() if v}, c0)


def build_virasoro(cal: Calibration, m: int, level: int | None = None) -> VirasoroOperator:
    if cal.cd is None:
        raise VirasoroError("Virasoro operators need a conformal calibration")
    return virasoro_operator(m, cal.cd.mu, cal.R, cal.level if level is None else level)


@dataclass(frozen=True)
class ConstraintResult:
    value: float  # the left side of the constraint without the constant
    c0: float

    @property
    def residual(self) -> float:
        return abs(self.value)

    @property
    def residual_with_constant(self) -> float:
        return abs(self.value + self.c0)


def constraint_residual(L: VirasoroOperator, table: OmegaTable, config: TimeConfiguration,
                        v: Sequence[float], *, derivative_offsets: Mapping[Key, float] | None = None
                        ) -> ConstraintResult:
    """Evaluate ``sum a dlogtau dlogtau + sum b t~ dlogtau + sum c2 t~ t~`` at ``v``.

    Derivatives of log tau are the analytic sums ``sum t~ Omega``.
    ``derivative_offsets`` adds fixed amounts to them (negative controls).
    """
    active = config.active()
    for key in active:
        if key[1] > L.level:
            raise LevelError(f"active time {key} is above the operator truncation {L.level}")
    cache: dict[Key, float] = {}
    offsets = derivative_offsets or {}

    def d(key: Key) -> float:
        if key not in cache:
            cache[key] = dlogtau(table, config, v, key) + offsets.get(key, 0.0)
        return cache[key]

    tt = {k: config.ttilde(k) for k in active}
    total = 0.0
    for (k1, k2), coeff in L.a.items():
        total += float(coeff) * d(k1) * d(k2)
    for (src, dst), coeff in L.b.items():
        if src in tt:
            total += float(coeff) * tt[src] * d(dst)
    for (k1, k2), coeff in L.c2.items():
        if k1 in tt and k2 in tt:
            total += float(coeff) * tt[k1] * tt[k2]
    return ConstraintResult(total, float(L.c0))


# -- the commutation relation --------------------------------------------------------

Monomial = tuple[Key, ...]  # sorted multiset of time keys
Poly = dict[Monomial, Fraction]


def _mono(*keys: Key) -> Monomial:
    return tuple(sorted(keys))


def _add(out: Poly, mono: Monomial, c: Fraction):
    out[mono] = out.get(mono, Fraction(0)) + c
    if not out[mono]:
        del out[mono]


def _d(poly: Poly, key: Key) -> Poly:
    out: Poly = {}
    for mono, c in poly.items():
        k = mono.count(key)
        if k:
            rest = list(mono)
            rest.remove(key)
            _add(out, tuple(rest), c * k)
    return out


def apply(L: VirasoroOperator, poly: Poly) -> Poly:
    out: Poly = {}
    for (k1, k2), coeff in L.a.items():
        for mono, c in _d(_d(poly, k2), k1).items():
            _add(out, mono, coeff * c)
    for (src, dst), coeff in L.b.items():
        for mono, c in _d(poly, dst).items():
            _add(out, _mono(*mono, src), coeff * c)
    for (k1, k2), coeff in L.c2.items():
        for mono, c in poly.items():
            _add(out, _mono(*mono, k1, k2), coeff * c)
    if L.c0:
        for mono, c in poly.items():
            _add(out, mono, L.c0 * c)
    return out


def test_monomials(n: int, level: int, degree: int = 2) -> list[Monomial]:
    keys = [(a, p) for p in range(level + 1) for a in range(1, n + 1)]
    out: list[Monomial] = [()]
    for d in range(1, degree + 1):
        out.extend(_mono(*c) for c in combinations_with_replacement(keys, d))
    return out


def check_commutator(Lm1: VirasoroOperator, L0: VirasoroOperator, n: int, level: int | None = None,
                     degree: int = 2) -> tuple[int, list[tuple[Monomial, Poly]]]:
    """Apply ``[L_{-1}, L_0] + L_{-1}`` to every test monomial.

    The default test level leaves room for the truncation: one step for
    L_{-1} raising the level plus the largest R-index present.
    Returns the number of monomials tested and the nonzero results.
    """
    if Lm1.level != L0.level:
        raise VirasoroError("operators are truncated at different levels")
    rmax = max((p + q + 1 for (a, p), (b, q) in L0.c2), default=0)
    rmax = max([rmax] + [src[1] - dst[1] for src, dst in L0.b])
    top = Lm1.level - 1 - rmax
    if level is None:
        level = top
    if level > top or level < 0:
        raise VirasoroError(f"test level {level} exceeds the truncation-safe level {top}")
    bad = []
    monos = test_monomials(n, level, degree)
    for mono in monos:
        f = {mono: Fraction(1)}
        a = apply(Lm1, apply(L0, f))
        b = apply(L0, apply(Lm1, f))
        out: Poly = dict(a)
        for k, c in b.items():
            _add(out, k, -c)
        for k, c in apply(Lm1, f).items():
            _add(out, k, c)
        if out:
            bad.append((mono, out))
    return len(monos), bad
