"""Solutions of the WDVV equations, conformal data and the second metric.

Coordinates are named ``<prefix>1 .. <prefix>n`` (``v`` by default, ``vh``
for solutions produced by inversion).  The flat metric is always the
antidiagonal ``eta[a][b] = 1 if a + b == n + 1``, so it is its own inverse
and index raising is the relabeling ``c^a_{bc} = c_{n+1-a, b, c}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Mapping, Sequence

from .algebra.linsolve import InconsistentSystemError, solve
from .algebra.rational import RationalFunction, as_scalar, determinant, inverse

RF = RationalFunction


class SolutionError(ValueError):
    """A prepotential or its conformal data violates a structural invariant."""


def coordinate_names(n: int, prefix: str = "v") -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(1, n + 1))


def antidiagonal(n: int) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(int(a + b == n - 1)) for b in range(n)) for a in range(n))


@dataclass(frozen=True)
class ConformalData:
    """Charge ``d``, spectrum ``mu`` and the quadratic corrections A, B, C."""

    d: Fraction
    mu: tuple[Fraction, ...]
    A: tuple[tuple[Fraction, ...], ...] | None = None
    B: tuple[Fraction, ...] | None = None
    C: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "d", as_scalar(self.d))
        object.__setattr__(self, "mu", tuple(as_scalar(m) for m in self.mu))
        object.__setattr__(self, "C", as_scalar(self.C))
        if self.A is not None:
            object.__setattr__(self, "A", tuple(tuple(as_scalar(x) for x in row) for row in self.A))
        if self.B is not None:
            object.__setattr__(self, "B", tuple(as_scalar(x) for x in self.B))

    @property
    def n(self) -> int:
        return len(self.mu)

    def degrees(self) -> tuple[Fraction, ...]:
        """Weights ``1 - d/2 - mu_a`` of the coordinates under E."""
        return tuple(1 - self.d / 2 - m for m in self.mu)

    def violations(self) -> list[str]:
        """Invariants that fail; an empty list means the data is valid."""
        n, d, mu = self.n, self.d, self.mu
        out = []
        if mu[0] != -d / 2:
            out.append(f"mu_1 = {mu[0]} but -d/2 = {-d / 2}")
        for a in range(n):
            if mu[a] + mu[n - 1 - a] != 0:
                out.append(f"mu_{a + 1} + mu_{n - a} = {mu[a] + mu[n - 1 - a]} != 0")
        if self.A is not None:
            for a, b in product(range(n), repeat=2):
                x = self.A[a][b]
                if x and (a == 0 or b == 0):
                    out.append(f"A_{a + 1}{b + 1} must vanish (index 1)")
                elif x and mu[a] + mu[b] != -1:
                    out.append(f"A_{a + 1}{b + 1} != 0 needs mu_a + mu_b = -1")
                if x != self.A[b][a]:
                    out.append(f"A is not symmetric at ({a + 1},{b + 1})")
        if self.B is not None:
            for a, x in enumerate(self.B):
                if x and a == 0:
                    out.append("B_1 must vanish")
                elif x and mu[a] != d / 2 - 2:
                    out.append(f"B_{a + 1} != 0 needs mu_{a + 1} = d/2 - 2")
        if self.C and d != 3:
            out.append("C != 0 needs d = 3")
        return out

    def validate(self, n: int | None = None) -> "ConformalData":
        if n is not None and n != self.n:
            raise SolutionError(f"spectrum has {self.n} entries, solution has dimension {n}")
        bad = self.violations()
        if bad:
            raise SolutionError("invalid conformal data: " + "; ".join(bad))
        return self


@dataclass(frozen=True, eq=False)
class WDVVSolution:
    """A prepotential ``F`` in ``n`` flat coordinates, normalized so that
    ``d^3 F / dv1 dva dvb = eta_ab`` with antidiagonal ``eta``."""

    n: int
    F: RationalFunction
    prefix: str = "v"
    name: str = ""
    conformal: ConformalData | None = field(default=None)

    def __post_init__(self):
        if self.n < 2:
            raise SolutionError("dimension must be at least 2 (eta_11 = 0 is impossible for n = 1)")
        names = self.coordinates
        extra = set(self.F.free_variables) - set(names)
        if extra:
            raise SolutionError(f"F uses undeclared variables {sorted(extra)}")
        object.__setattr__(self, "F", self.F.with_variables(names))
        eta = self.eta
        for a, b in product(range(self.n), repeat=2):
            c = self.c_lower[0][a][b]
            if not (c == eta[a][b]):
                raise SolutionError(
                    f"d^3F/d{names[0]} d{names[a]} d{names[b]} = {c}, expected {eta[a][b]} (eta normalization)"
                )
        if self.conformal is not None:
            self.conformal.validate(self.n)

    @property
    def coordinates(self) -> tuple[str, ...]:
        return coordinate_names(self.n, self.prefix)

    @property
    def eta(self) -> tuple[tuple[Fraction, ...], ...]:
        return antidiagonal(self.n)

    def coordinate(self, a: int) -> RationalFunction:
        """The coordinate function ``v^a`` (1-based)."""
        return RF.variable(self.coordinates[a - 1], self.coordinates)

    def partial(self, f: RationalFunction, a: int) -> RationalFunction:
        """``d f / d v^a`` (1-based)."""
        return f.with_variables(self.coordinates).diff(self.coordinates[a - 1])

    @cached_property
    def hessian_F(self):
        names = self.coordinates
        grad = [self.F.diff(x) for x in names]
        return [[grad[a].diff(names[b]) for b in range(self.n)] for a in range(self.n)]

    @cached_property
    def c_lower(self):
        """``c_{abc}`` as a nested list indexed from 0."""
        names = self.coordinates
        n = self.n
        hess = self.hessian_F
        table = [[[None] * n for _ in range(n)] for _ in range(n)]
        for a, b, c in product(range(n), repeat=3):
            if a <= b <= c:
                table[a][b][c] = hess[a][b].diff(names[c])
        for a, b, c in product(range(n), repeat=3):
            table[a][b][c] = table[min(a, b, c)][sorted((a, b, c))[1]][max(a, b, c)]
        return table

    @cached_property
    def c_upper(self):
        """``c^a_{bc} = eta^{a nu} c_{nu b c}``, 0-based."""
        n = self.n
        return [[[self.c_lower[n - 1 - a][b][c] for c in range(n)] for b in range(n)] for a in range(n)]

    def with_conformal(self, cd: ConformalData | None) -> "WDVVSolution":
        return WDVVSolution(self.n, self.F, self.prefix, self.name, cd)


def structure_constants(sol: WDVVSolution):
    """Return ``(c_lower, c_upper)``; both are 0-based nested lists."""
    return sol.c_lower, sol.c_upper


@dataclass(frozen=True)
class Residual:
    indices: tuple[int, ...]  # 1-based
    value: RationalFunction

    def __str__(self) -> str:
        return f"{self.indices}: {self.value}"


def check_wdvv(sol: WDVVSolution) -> list[Residual]:
    """Associativity residuals ``c_ab^l c_lg^nu - c_gb^l c_la^nu``; empty iff associative."""
    n = sol.n
    cu = sol.c_upper
    out = []
    for a, b, g, nu in product(range(n), repeat=4):
        if g <= a:
            continue  # antisymmetric in (a, g)
        r = RF.constant(0, sol.coordinates)
        for lam in range(n):
            r = r + cu[lam][a][b] * cu[nu][lam][g] - cu[lam][g][b] * cu[nu][lam][a]
        if not r.is_zero():
            out.append(Residual((a + 1, b + 1, g + 1, nu + 1), r))
    return out


def euler(sol: WDVVSolution, cd: ConformalData, f: RationalFunction) -> RationalFunction:
    """Apply ``E = sum (1 - d/2 - mu_a) v^a d_a`` to ``f``."""
    f = f.with_variables(set(f.variables) | set(sol.coordinates))
    out = RF.constant(0, f.variables)
    for a, w in enumerate(cd.degrees()):
        if w:
            out = out + w * sol.coordinate(a + 1) * f.diff(sol.coordinates[a])
    return out


def quadratic_part(sol: WDVVSolution, cd: ConformalData) -> RationalFunction:
    """``1/2 A_ab v^a v^b + B_a v^a + C``."""
    n = sol.n
    v = [sol.coordinate(a + 1) for a in range(n)]
    q = RF.constant(cd.C, sol.coordinates)
    if cd.A is not None:
        for a, b in product(range(n), repeat=2):
            if cd.A[a][b]:
                q = q + Fraction(1, 2) * cd.A[a][b] * v[a] * v[b]
    if cd.B is not None:
        for a in range(n):
            if cd.B[a]:
                q = q + cd.B[a] * v[a]
    return q


def check_conformal(sol: WDVVSolution, cd: ConformalData) -> RationalFunction:
    """``E(F) - (3 - d) F - quadratic``; identically zero iff conformal."""
    return euler(sol, cd, sol.F) - (3 - cd.d) * sol.F - quadratic_part(sol, cd)


def _laurent_terms(sol: WDVVSolution) -> dict[tuple[int, ...], Fraction]:
    """Exponent vectors of F, allowing a monomial denominator."""
    den = sol.F.denominator.terms()
    if len(den) != 1:
        raise SolutionError("degree inference needs a Laurent polynomial (monomial denominator)")
    (dexp, dcoef), = den.items()
    out = {}
    for exp, coef in sol.F.numerator.terms().items():
        out[tuple(e - f for e, f in zip(exp, dexp))] = coef / dcoef
    return out


def _fmt_monomial(exp: Sequence[int], names: Sequence[str]) -> str:
    parts = [x if e == 1 else f"{x}^{e}" for x, e in zip(names, exp) if e]
    return "*".join(parts) or "1"


def infer_spectrum(sol: WDVVSolution) -> ConformalData:
    """Find ``(d, mu)`` with ``E(F) = (3 - d) F + quadratic`` and ``deg v1 = 1``.

    Unknowns are the weights ``delta_2 .. delta_n`` and ``D = 3 - d``; each
    monomial that is not an ordinary quadratic polynomial term gives one
    linear equation ``sum e_a delta_a = D``.
    """
    n, names = sol.n, sol.coordinates
    terms = _laurent_terms(sol)
    cubic = sorted(
        (e for e in terms if not (all(x >= 0 for x in e) and sum(e) <= 2)),
        key=lambda e: (sum(map(abs, e)), e),
    )
    rows, rhs = [], []
    for e in cubic:
        rows.append([Fraction(x) for x in e[1:]] + [Fraction(-1)])
        rhs.append(Fraction(-e[0]))
    try:
        x, free = solve(rows, rhs)
    except InconsistentSystemError as exc:
        bad = cubic[exc.row]
        # find an earlier monomial that, on its own with ``bad``, already conflicts
        partner = next(
            (cubic[j] for j in range(exc.row) if _conflict(rows, rhs, j, exc.row)),
            cubic[0],
        )
        raise SolutionError(
            "no consistent degree assignment: monomials "
            f"{_fmt_monomial(partner, names)} and {_fmt_monomial(bad, names)} have incompatible degrees"
        ) from None
    if free:
        raise SolutionError(
            "degree assignment is underdetermined (free: "
            + ", ".join("3-d" if j == n - 1 else f"deg {names[j + 1]}" for j in free)
            + ")"
        )
    weights = [Fraction(1)] + x[: n - 1]
    d = 3 - x[n - 1]
    mu = tuple(1 - d / 2 - w for w in weights)
    cd = ConformalData(d, mu)
    # quadratic corrections from the residual; it must be an ordinary quadratic polynomial
    resid = check_conformal(sol, cd)
    if not resid.is_polynomial() or any(sum(e) > 2 for e in resid.numerator.terms()):
        raise SolutionError("E(F) - (3-d)F is not quadratic")
    A = [[Fraction(0)] * n for _ in range(n)]
    B = [Fraction(0)] * n
    C = Fraction(0)
    scale = Fraction(1) / resid.denominator.terms()[(0,) * n]
    for e, c in resid.numerator.terms().items():
        c *= scale
        idx = [i for i, k in enumerate(e) for _ in range(k)]
        if len(idx) == 2:
            a, b = idx
            if a == b:
                A[a][a] = 2 * c
            else:
                A[a][b] = A[b][a] = c
        elif len(idx) == 1:
            B[idx[0]] = c
        else:
            C = c
    cd = ConformalData(d, mu, tuple(map(tuple, A)) if any(map(any, A)) else None,
                       tuple(B) if any(B) else None, C)
    bad = cd.violations()
    if bad:
        quad = [e for e in terms if all(x >= 0 for x in e) and sum(e) <= 2]
        offending = ", ".join(_fmt_monomial(e, names) for e in sorted(quad))
        raise SolutionError(
            f"degree assignment d={d}, mu={list(map(str, mu))} leaves non-normalizable "
            f"quadratic terms ({offending}): " + "; ".join(bad)
        )
    return cd


def _conflict(rows, rhs, i, j) -> bool:
    try:
        solve([rows[i], rows[j]], [rhs[i], rhs[j]])
    except InconsistentSystemError:
        return True
    return False


@dataclass(frozen=True, eq=False)
class MetricPair:
    """Second metric ``g^{ab}`` and its contravariant connection ``Gamma^{ab}_c``."""

    g: list
    Gamma: list


def _c_raised(sol: WDVVSolution):
    """``c^{ab}_c = eta^{a s} c^b_{s c}``, 0-based."""
    n = sol.n
    cu = sol.c_upper
    return [[[cu[b][n - 1 - a][c] for c in range(n)] for b in range(n)] for a in range(n)]


def second_metric(sol: WDVVSolution, cd: ConformalData) -> MetricPair:
    n = sol.n
    cc = _c_raised(sol)
    w = cd.degrees()
    v = [sol.coordinate(a + 1) for a in range(n)]
    g = [[sum((w[c] * v[c] * cc[a][b][c] for c in range(n) if w[c]), RF.constant(0, sol.coordinates))
          for b in range(n)] for a in range(n)]
    Gamma = [[[(Fraction(1, 2) - cd.mu[b]) * cc[a][b][c] for c in range(n)] for b in range(n)] for a in range(n)]
    return MetricPair(g, Gamma)


def _zero_matrix(sol, rows, cols):
    return [[RF.constant(0, sol.coordinates) for _ in range(cols)] for _ in range(rows)]


def check_hessian_identity(sol: WDVVSolution, cd: ConformalData, metric: MetricPair | None = None):
    """``nabla^i nabla_k (v^n) - (1-d)/2 delta^i_k`` via the Levi-Civita
    connection of the covariant metric ``(g^{ab})^{-1}``.  Returns an n x n
    matrix of rational functions, 0-based."""
    n, names = sol.n, sol.coordinates
    g_up = (metric or second_metric(sol, cd)).g
    try:
        g_low = inverse(g_up)
    except ZeroDivisionError:
        raise SolutionError("second metric is degenerate; Levi-Civita connection undefined") from None
    dg = [[[g_low[i][j].diff(names[k]) for k in range(n)] for j in range(n)] for i in range(n)]
    # Christoffel symbols of the first kind, only the n-th upper component is needed
    last = n - 1
    gamma_n = [[sum((Fraction(1, 2) * g_up[last][l] * (dg[j][l][k] + dg[k][l][j] - dg[j][k][l])
                     for l in range(n)), RF.constant(0, names)) for k in range(n)] for j in range(n)]
    # nabla_j nabla_k v^n = -Gamma^n_{jk}; raise j with g^{ij}
    c = (1 - cd.d) / 2
    out = _zero_matrix(sol, n, n)
    for i, k in product(range(n), repeat=2):
        acc = RF.constant(0, names)
        for j in range(n):
            acc = acc - g_up[i][j] * gamma_n[j][k]
        out[i][k] = acc - (c if i == k else 0)
    return out


def nonlocal_charge(sol: WDVVSolution, cd: ConformalData, metric: MetricPair | None = None) -> RationalFunction:
    """``1/2 g^{ab} d_a v^n d_b v^n - (1-d)/2 v^n``; expected to vanish."""
    g = (metric or second_metric(sol, cd)).g
    n = sol.n
    return Fraction(1, 2) * g[n - 1][n - 1] - (1 - cd.d) / 2 * sol.coordinate(n)


def metric_determinant(metric: MetricPair) -> RationalFunction:
    return determinant(metric.g)


def is_zero_tensor(t) -> bool:
    if isinstance(t, RationalFunction):
        return t.is_zero()
    return all(is_zero_tensor(x) for x in t)


def solution_from_text(n: int, F: str, *, prefix: str = "v", name: str = "",
                       d=None, mu=None, quad: Mapping | None = None) -> WDVVSolution:
    """Convenience constructor parsing ``F`` in the expression grammar."""
    from .algebra.parse import parse_expression

    expr = parse_expression(F, coordinate_names(n, prefix))
    cd = None
    if d is not None and mu is not None:
        cd = ConformalData(d, tuple(mu), **(quad or {}))
    return WDVVSolution(n, expr, prefix, name, cd)
