"""The inversion symmetry of WDVV solutions.

For antidiagonal eta the change of coordinates is

    vh1 = (1/2) eta(v, v) / v^n,   vh^i = v^i / v^n,   vh^n = -1 / v^n,

and the new prepotential is ``(v^n)^-2 (F - 1/2 v^1 eta(v, v))`` written in
the hatted coordinates.  The transformed ``F`` is kept exactly as produced;
it never needs quadratic terms dropped for the shipped examples.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .algebra.rational import RationalFunction, inverse
from .frobenius import (
    ConformalData,
    SolutionError,
    WDVVSolution,
    check_wdvv,
    coordinate_names,
    second_metric,
)

RF = RationalFunction
HAT = "vh"


@dataclass(frozen=True, eq=False)
class CoordinateMap:
    """``forward[a]`` is ``vh^{a+1}`` as a function of v; ``backward[a]`` is
    ``v^{a+1}`` as a function of vh."""

    n: int
    prefix: str
    hat_prefix: str
    forward: tuple[RationalFunction, ...]
    backward: tuple[RationalFunction, ...]

    @property
    def source(self) -> tuple[str, ...]:
        return coordinate_names(self.n, self.prefix)

    @property
    def target(self) -> tuple[str, ...]:
        return coordinate_names(self.n, self.hat_prefix)

    def pull_back(self, f: RationalFunction) -> RationalFunction:
        """Express a function of vh as a function of v."""
        return f.subs({h: e for h, e in zip(self.target, self.forward) if h in f.variables})

    def push_forward(self, f: RationalFunction) -> RationalFunction:
        """Express a function of v as a function of vh."""
        return f.subs({x: e for x, e in zip(self.source, self.backward) if x in f.variables})

    def forward_point(self, v):
        point = dict(zip(self.source, v))
        return [e.evaluate(point) for e in self.forward]

    def backward_point(self, vh):
        point = dict(zip(self.target, vh))
        return [e.evaluate(point) for e in self.backward]

    def jacobian(self):
        """``d vh^a / d v^b`` (0-based) as rational functions of v."""
        return [[f.diff(x) for x in self.source] for f in self.forward]

    def check_roundtrip(self) -> bool:
        """``backward(forward(v)) = v`` and ``forward(backward(vh)) = vh``, exactly."""
        there = all(self.pull_back(b) == RF.variable(x, self.source) for b, x in zip(self.backward, self.source))
        back = all(self.push_forward(f) == RF.variable(h, self.target) for f, h in zip(self.forward, self.target))
        return there and back


def _half_eta(vs):
    """``1/2 eta_ab v^a v^b`` for antidiagonal eta."""
    n = len(vs)
    return sum((Fraction(1, 2) * vs[a] * vs[n - 1 - a] for a in range(n)), RF.constant(0))


def inversion_map(n: int, prefix: str = "v", hat_prefix: str = HAT) -> CoordinateMap:
    if n < 2:
        raise SolutionError("inversion needs n >= 2")
    src = coordinate_names(n, prefix)
    tgt = coordinate_names(n, hat_prefix)
    v = [RF.variable(x, src) for x in src]
    vh = [RF.variable(x, tgt) for x in tgt]
    vn = v[-1]
    forward = [_half_eta(v) / vn] + [v[i] / vn for i in range(1, n - 1)] + [-1 / vn]
    # solve back: v^n from vh^n, middle coordinates next, v^1 last
    bn = -1 / vh[-1]
    mid = [vh[i] * bn for i in range(1, n - 1)]
    partial = [RF.constant(0, tgt)] + mid + [bn]
    # vh^1 v^n = v^1 v^n + 1/2 sum_mid v^i v^{n+1-i}
    b1 = vh[0] - (_half_eta(partial) - RF.constant(0)) / bn
    backward = [b1] + mid + [bn]
    return CoordinateMap(n, prefix, hat_prefix,
                         tuple(f.with_variables(src) for f in forward),
                         tuple(b.with_variables(tgt) for b in backward))


def invert_solution(sol: WDVVSolution, hat_prefix: str = HAT, *, cmap: CoordinateMap | None = None) -> WDVVSolution:
    """The inverted solution in coordinates ``vh1..vhn``.

    Conformal data, when present on ``sol``, is transformed and attached.
    """
    if check_wdvv(sol):
        raise SolutionError("input does not satisfy WDVV; inversion is undefined")
    cmap = cmap or inversion_map(sol.n, sol.prefix, hat_prefix)
    v = [sol.coordinate(a + 1) for a in range(sol.n)]
    expr = (sol.F - v[0] * _half_eta(v)) / v[-1] ** 2
    Fh = cmap.push_forward(expr)
    cd = transform_conformal(sol.conformal) if sol.conformal is not None else None
    name = f"{sol.name}^" if sol.name else ""
    return WDVVSolution(sol.n, Fh, hat_prefix, name, cd)


def transform_conformal(cd: ConformalData) -> ConformalData:
    n = cd.n
    mu = list(cd.mu)
    mu_hat = [mu[n - 1] - 1] + mu[1:n - 1] + [mu[0] + 1]
    return ConformalData(2 - cd.d, tuple(mu_hat))


def check_metric_covariance(sol: WDVVSolution, cd: ConformalData, sol_hat: WDVVSolution | None = None,
                            cd_hat: ConformalData | None = None, cmap: CoordinateMap | None = None):
    """Residuals ``(v^n)^2 J^T eta J - eta`` and ``(v^n)^2 J^T gh(vh(v)) J - g``
    with covariant metrics and ``J = d vh / d v``; both 0-based n x n.

    Pass ``cd=None`` to get only the eta residual (second entry ``None``).
    """
    n = sol.n
    cmap = cmap or inversion_map(n, sol.prefix)
    J = cmap.jacobian()
    vn2 = sol.coordinate(n) ** 2
    eta = sol.eta

    def pulled(metric_hat):
        out = [[None] * n for _ in range(n)]
        for a, b in product(range(n), repeat=2):
            acc = RF.constant(0, sol.coordinates)
            for c, e in product(range(n), repeat=2):
                m = metric_hat[c][e]
                if isinstance(m, RationalFunction):
                    if m.is_zero():
                        continue
                elif not m:
                    continue
                acc = acc + m * J[c][a] * J[e][b]
            out[a][b] = vn2 * acc
        return out

    pe = pulled(eta)
    eta_res = [[pe[a][b] - eta[a][b] for b in range(n)] for a in range(n)]
    if cd is None:
        return eta_res, None
    sol_hat = sol_hat or invert_solution(sol, cmap=cmap)
    cd_hat = cd_hat or transform_conformal(cd)
    g_low = inverse(second_metric(sol, cd).g)
    gh_low = inverse(second_metric(sol_hat, cd_hat).g)
    gh_in_v = [[cmap.pull_back(x) for x in row] for row in gh_low]
    pg = pulled(gh_in_v)
    g_res = [[pg[a][b] - g_low[a][b] for b in range(n)] for a in range(n)]
    return eta_res, g_res


def middle_reflection(sol: WDVVSolution) -> WDVVSolution:
    """``F(v^1, -v^2, ..., -v^{n-1}, v^n)``: the square of the inversion."""
    flips = {x: -RF.variable(x) for x in sol.coordinates[1:-1]}
    return WDVVSolution(sol.n, sol.F.subs(flips) if flips else sol.F, sol.prefix, sol.name, sol.conformal)


def check_double_inversion(sol: WDVVSolution) -> list[list[list[RationalFunction]]]:
    """Third derivatives of the twice-inverted solution minus those of the
    middle reflection of ``sol``; all zero expected.  Inverting twice maps
    ``v^i`` (middle) to ``-v^i``, so the identity only holds up to that
    reflection, which is trivial for n = 2 and for F even in the middle
    coordinates."""
    hat = HAT if sol.prefix != HAT else "w"
    once = invert_solution(sol, hat, cmap=inversion_map(sol.n, sol.prefix, hat))
    twice = invert_solution(once, sol.prefix, cmap=inversion_map(sol.n, hat, sol.prefix))
    ref = middle_reflection(sol).c_lower
    n = sol.n
    return [[[twice.c_lower[a][b][c] - ref[a][b][c] for c in range(n)] for b in range(n)] for a in range(n)]
