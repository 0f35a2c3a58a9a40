"""Calibrations: deformed flat coordinates theta_{a,p}, R-matrices, Omega tables.

Indices ``alpha`` are 1-based throughout the public API, matching the
``(alpha, p)`` labels of the times.  R-matrices are stored as
``R[k][row][col] = (R_k)^{row+1}_{col+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping

from .algebra.linsolve import InconsistentSystemError, solve
from .algebra.rational import RationalFunction
from .frobenius import ConformalData, WDVVSolution, check_wdvv, euler
from .inversion import CoordinateMap, invert_solution, inversion_map, transform_conformal

RF = RationalFunction
Matrix = tuple[tuple[Fraction, ...], ...]


class CalibrationError(ValueError):
    pass


class NonIntegrableError(CalibrationError):
    """The Hessian recursion has no solution: the input is not a WDVV solution."""


class ResonanceError(CalibrationError):
    """Def-4.2 type equations for the R-matrices have no solution."""


class LevelError(CalibrationError):
    """A request needs a deeper calibration than the one available."""


def zero_matrix(n: int) -> Matrix:
    return tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))


@dataclass(eq=False)
class Calibration:
    sol: WDVVSolution
    level: int
    theta: dict[tuple[int, int], RationalFunction]
    R: dict[int, Matrix] = field(default_factory=dict)
    cd: ConformalData | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._grad: dict = {}
        self._hess: dict = {}

    @property
    def n(self) -> int:
        return self.sol.n

    @property
    def names(self) -> tuple[str, ...]:
        return self.sol.coordinates

    def th(self, alpha: int, p: int) -> RationalFunction:
        """theta_{alpha,p}; ``theta_{n,-1} = 1`` and other negative levels are 0."""
        if p < 0:
            return RF.constant(1 if (alpha == self.n and p == -1) else 0, self.names)
        if p > self.level:
            raise LevelError(f"theta_{alpha},{p} needs level {p}, calibration has {self.level}")
        return self.theta[(alpha, p)]

    def grad(self, alpha: int, p: int) -> list[RationalFunction]:
        key = (alpha, p)
        if key not in self._grad:
            t = self.th(alpha, p)
            self._grad[key] = [t.diff(x) for x in self.names]
        return self._grad[key]

    def hess(self, alpha: int, p: int) -> list[list[RationalFunction]]:
        key = (alpha, p)
        if key not in self._hess:
            g = self.grad(alpha, p)
            n = self.n
            h = [[None] * n for _ in range(n)]
            for a in range(n):
                for b in range(a, n):
                    h[a][b] = h[b][a] = g[a].diff(self.names[b])
            self._hess[key] = h
        return self._hess[key]

    def R_matrix(self, k: int) -> Matrix:
        return self.R.get(k, zero_matrix(self.n))

    def with_theta(self, updates: Mapping[tuple[int, int], RationalFunction]) -> "Calibration":
        theta = dict(self.theta)
        theta.update(updates)
        return Calibration(self.sol, self.level, theta, dict(self.R), self.cd, list(self.notes))

    def truncated(self, level: int) -> "Calibration":
        if level > self.level:
            raise LevelError(f"cannot raise level {self.level} to {level}")
        theta = {k: v for k, v in self.theta.items() if k[1] <= level}
        R = {k: m for k, m in self.R.items() if k <= level}
        return Calibration(self.sol, level, theta, R, self.cd, list(self.notes))


# -- construction -----------------------------------------------------------

def _radial(f: RationalFunction, names) -> RationalFunction:
    """Multiply each monomial of total degree m by 1/(m+1)."""
    if not f.is_polynomial():
        raise CalibrationError("closed-form integration needs polynomial data")
    f = f.with_variables(names)
    scale = 1 / f.denominator.terms()[(0,) * len(names)]
    terms = {e: c * scale / (sum(e) + 1) for e, c in f.numerator.terms().items()}
    return RF.from_terms(terms, names)


def _integrate_hessian(H, value_at_zero: Fraction, names) -> RationalFunction:
    """Solve ``d_b d_c theta = H[b][c]`` with ``theta(0) = 0``,
    ``d_1 theta (0) = value_at_zero`` and the other gradient constants 0."""
    n = len(names)
    v = [RF.variable(x, names) for x in names]
    G = []
    for c in range(n):
        acc = RF.constant(value_at_zero if c == 0 else 0, names)
        for b in range(n):
            if not H[b][c].is_zero():
                acc = acc + _radial(H[b][c], names) * v[b]
        G.append(acc)
    theta = RF.constant(0, names)
    for c in range(n):
        if not G[c].is_zero():
            theta = theta + _radial(G[c], names) * v[c]
    return theta


def _hessian_target(sol: WDVVSolution, grad) -> list[list[RationalFunction]]:
    """``c^s_{bc} d_s theta``, 0-based."""
    n = sol.n
    cu = sol.c_upper
    return [[sum((cu[s][b][c] * grad[s] for s in range(n) if not grad[s].is_zero()), RF.constant(0, sol.coordinates))
             for c in range(n)] for b in range(n)]


def _value_at_zero(f: RationalFunction) -> Fraction:
    return f.subs({x: 0 for x in f.free_variables}).constant_value()


def build_calibration(sol: WDVVSolution, cd: ConformalData | None = None, P: int = 4,
                      *, precheck: bool = True) -> Calibration:
    """Construct theta_{alpha,p} for 0 <= p <= P by Hessian integration.

    With ``precheck=False`` the WDVV test is skipped and a non-associative
    input is caught by the closedness test of the integrated Hessian.
    """
    if P < 1:
        raise LevelError("level must be at least 1")
    if cd is None:
        cd = sol.conformal
    if precheck and check_wdvv(sol):
        raise NonIntegrableError("WDVV residuals are nonzero; the Hessian recursion is not integrable")
    if not sol.F.is_polynomial():
        raise CalibrationError("build_calibration needs a polynomial prepotential (use transform_calibration)")
    if cd is not None:
        cd.validate(sol.n)
    n, names = sol.n, sol.coordinates
    theta: dict[tuple[int, int], RF] = {}
    for a in range(1, n + 1):
        theta[(a, 0)] = sol.coordinate(n + 1 - a)
        theta[(a, 1)] = sol.F.diff(names[a - 1])
    for p in range(1, P):
        for a in range(1, n + 1):
            prev = theta[(a, p)]
            grad = [prev.diff(x) for x in names]
            H = _hessian_target(sol, grad)
            t = _integrate_hessian(H, _value_at_zero(prev), names)
            for b, c in product(range(n), repeat=2):
                if b <= c and not (t.diff(names[b]).diff(names[c]) == H[b][c]):
                    raise NonIntegrableError(
                        f"Hessian of theta_{a},{p + 1} is not closed at ({b + 1},{c + 1})"
                    )
            theta[(a, p + 1)] = t
    cal = Calibration(sol, P, theta, {}, cd)
    if cd is not None:
        _solve_R(cal)
    return cal


def conformal_defect(cal: Calibration, alpha: int, p: int, beta: int) -> RationalFunction:
    """``E(d_b theta_{a,p}) - (p + mu_a + mu_b) d_b theta_{a,p}``."""
    cd = cal.cd
    g = cal.grad(alpha, p)[beta - 1]
    return euler(cal.sol, cd, g) - (p + cd.mu[alpha - 1] + cd.mu[beta - 1]) * g


def _solve_R(cal: Calibration) -> None:
    """Fill ``cal.R`` from the conformal defects; minimal support when free."""
    n, P, cd = cal.n, cal.level, cal.cd
    defects = {(a, p, b): conformal_defect(cal, a, p, b)
               for a in range(1, n + 1) for p in range(P + 1) for b in range(1, n + 1)}
    if all(d.is_zero() for d in defects.values()):
        cal.notes.append("no resonant defects: all R_k = 0")
        return
    R = {k: [[Fraction(0)] * n for _ in range(n)] for k in range(1, P + 1)}
    for a in range(1, n + 1):
        # unknowns (R_k)^g_a with mu_g - mu_a = k
        unknowns = [(k, g) for k in range(1, P + 1) for g in range(1, n + 1)
                    if cd.mu[g - 1] - cd.mu[a - 1] == k]
        eqs: dict = {}
        for p in range(P + 1):
            for b in range(1, n + 1):
                lhs = {}
                for j, (k, g) in enumerate(unknowns):
                    if k <= p:
                        lhs[j] = cal.grad(g, p - k)[b - 1]
                rows = _coefficient_rows(defects[(a, p, b)], lhs, cal.names)
                for mono, (row, rhs) in rows.items():
                    eqs[(p, b, mono)] = (row, rhs)
        if not eqs:
            continue
        if not unknowns:
            if any(rhs for _, rhs in eqs.values()):
                raise ResonanceError(f"conformal defect for alpha={a} with no resonant R entries available")
            continue
        keys = sorted(eqs)
        rows = [[eqs[k][0].get(j, Fraction(0)) for j in range(len(unknowns))] for k in keys]
        rhs = [eqs[k][1] for k in keys]
        try:
            x, free = solve(rows, rhs)
        except InconsistentSystemError as exc:
            p, b, _ = keys[exc.row]
            raise ResonanceError(f"resonance system inconsistent at alpha={a}, p={p}, beta={b}") from None
        if free:
            cal.notes.append(f"alpha={a}: minimal-support choice, free R entries set to 0: "
                             + ", ".join(f"(R_{unknowns[j][0]})^{unknowns[j][1]}_{a}" for j in free))
        for j, (k, g) in enumerate(unknowns):
            R[k][g - 1][a - 1] = x[j]
    cal.R = {k: tuple(map(tuple, m)) for k, m in R.items() if any(map(any, m))}
    if cal.R:
        cal.notes.append("nonzero R matrices: " + ", ".join(f"R_{k}" for k in sorted(cal.R)))


def _coefficient_rows(target: RationalFunction, lhs: Mapping[int, RationalFunction], names):
    """Split ``sum_j x_j lhs[j] = target`` into one scalar equation per monomial."""
    out: dict = {}

    def terms(f):
        f = f.with_variables(names)
        if not f.is_polynomial():
            raise CalibrationError("resonance solving needs polynomial data")
        s = 1 / f.denominator.terms()[(0,) * len(names)]
        return {e: c * s for e, c in f.numerator.terms().items()}

    for e, c in terms(target).items():
        out.setdefault(e, ({}, Fraction(0)))
        out[e] = (out[e][0], c)
    for j, f in lhs.items():
        for e, c in terms(f).items():
            row, rhs = out.setdefault(e, ({}, Fraction(0)))
            row[j] = row.get(j, Fraction(0)) + c
    return out


# -- verification -------------------------------------------------------------

@dataclass(frozen=True)
class Issue:
    check: str
    where: str
    residual: str

    def __str__(self) -> str:
        return f"{self.check} [{self.where}]: {self.residual}"


def check_R(R: Mapping[int, Matrix], mu, eta) -> list[Issue]:
    """Conditions (R_k)^a_b != 0 only if mu_a - mu_b = k, and the eta-skewness."""
    n = len(mu)
    out = []
    for k, m in sorted(R.items()):
        for a, b in product(range(n), repeat=2):
            if m[a][b] and mu[a] - mu[b] != k:
                out.append(Issue("R-support", f"k={k} ({a + 1},{b + 1})", str(m[a][b])))
            s = sum(eta[a][g] * m[g][b] for g in range(n)) + (-1) ** k * sum(eta[b][g] * m[g][a] for g in range(n))
            if s:
                out.append(Issue("R-skew", f"k={k} ({a + 1},{b + 1})", str(s)))
    return out


def check_calibration(cal: Calibration, level: int | None = None) -> list[Issue]:
    """Re-verify every calibration axiom symbolically; empty list = pass."""
    L = cal.level if level is None else level
    if L > cal.level:
        raise LevelError(f"requested level {L} exceeds calibration level {cal.level}")
    sol, n, names = cal.sol, cal.n, cal.names
    out: list[Issue] = []

    def flag(check, where, r):
        if isinstance(r, RationalFunction):
            if not r.is_zero():
                out.append(Issue(check, where, str(r)))
        elif r:
            out.append(Issue(check, where, str(r)))

    for a in range(1, n + 1):
        flag("theta_0 = v_alpha", f"alpha={a}", cal.th(a, 0) - sol.coordinate(n + 1 - a))
        if L >= 1:
            flag("theta_1 = dF", f"alpha={a}", cal.th(a, 1) - sol.F.diff(names[a - 1]))
        for p in range(0, L + 1):
            lower = cal.th(a, p - 1) if p >= 1 else RF.constant(sol.eta[0][a - 1], names)
            flag("d_1 theta_p = theta_{p-1}", f"alpha={a} p={p}", cal.grad(a, p)[0] - lower)
        for p in range(0, L):
            target = _hessian_target(sol, cal.grad(a, p))
            h = cal.hess(a, p + 1)
            for b in range(n):
                for c in range(b, n):
                    flag("Hessian recursion", f"alpha={a} p={p + 1} ({b + 1},{c + 1})", h[b][c] - target[b][c])
    for m in range(0, L + 1):
        for a in range(1, n + 1):
            for b in range(a, n + 1):
                acc = RF.constant(-sol.eta[a - 1][b - 1] if m == 0 else 0, names)
                for i in range(m + 1):
                    ga, gb = cal.grad(a, i), cal.grad(b, m - i)
                    term = sum((ga[s] * gb[n - 1 - s] for s in range(n)), RF.constant(0, names))
                    acc = acc + (term if (m - i) % 2 == 0 else -term)
                flag("orthonormality", f"z^{m} ({a},{b})", acc)
    if cal.cd is not None:
        mu = cal.cd.mu
        for issue in check_R({k: m for k, m in cal.R.items() if k <= L}, mu, sol.eta):
            out.append(issue)
        for a, p, b in product(range(1, n + 1), range(L + 1), range(1, n + 1)):
            r = conformal_defect(cal, a, p, b)
            for k in range(1, p + 1):
                Rk = cal.R_matrix(k)
                for g in range(1, n + 1):
                    if Rk[g - 1][a - 1]:
                        r = r - Rk[g - 1][a - 1] * cal.grad(g, p - k)[b - 1]
            flag("conformal", f"alpha={a} p={p} beta={b}", r)
    return out


# -- Omega table ----------------------------------------------------------------

@dataclass(eq=False)
class OmegaTable:
    """Omega_{a,p; b,q} for p + q <= level - 1 (plus the ``(n,-1)`` sentinels)."""

    cal: Calibration
    entries: dict[tuple[int, int, int, int], RationalFunction]

    @property
    def level(self) -> int:
        return self.cal.level - 1

    def available(self, p: int, q: int) -> bool:
        return p + q <= self.level

    def __call__(self, a: int, p: int, b: int, q: int) -> RationalFunction:
        n = self.cal.n
        if p < 0 or q < 0:
            if (p < 0 and (a, p) != (n, -1)) or (q < 0 and (b, q) != (n, -1)):
                raise LevelError(f"Omega_{a},{p};{b},{q} is not defined")
            other = (b, q) if p < 0 else (a, p)
            one = other == (1, 0)
            return RF.constant(1 if one else 0, self.cal.names)
        key = (a, p, b, q)
        if key not in self.entries:
            raise LevelError(f"Omega_{a},{p};{b},{q} needs p+q <= {self.level}")
        return self.entries[key]


def _M(cal: Calibration, a: int, p: int, b: int, q: int) -> RationalFunction:
    n = cal.n
    ga, gb = cal.grad(a, p), cal.grad(b, q)
    return sum((ga[s] * gb[n - 1 - s] for s in range(n) if not ga[s].is_zero()), RF.constant(0, cal.names))


def omega_table(cal: Calibration) -> OmegaTable:
    """Coefficients of ``(dtheta(z) eta^-1 dtheta(w) - eta) / (z + w)``."""
    n, L = cal.n, cal.level
    entries: dict = {}
    for total in range(L):
        for a, b in product(range(1, n + 1), repeat=2):
            for p in range(total + 1):
                q = total - p
                val = _M(cal, a, p, b, q + 1)
                if p > 0:
                    val = val - entries[(a, p - 1, b, q + 1)]
                entries[(a, p, b, q)] = val
    # the other coefficient of (z+w) must agree: Omega_{p,q} + Omega_{p+1,q-1} = M_{p+1,q}
    for (a, p, b, q), val in entries.items():
        if q >= 1:
            other = entries[(a, p + 1, b, q - 1)]
            if not (val + other == _M(cal, a, p + 1, b, q)):
                raise CalibrationError(f"Omega recursion inconsistent at ({a},{p};{b},{q}): orthonormality broken")
    return OmegaTable(cal, entries)


def check_omega(table: OmegaTable) -> list[Issue]:
    """Symmetry, the derivative formula and the (1,0) row, for every entry."""
    cal = table.cal
    sol, n, names = cal.sol, cal.n, cal.names
    cu = sol.c_upper
    # c^{sl}_x = eta^{s g} c^l_{g x}
    cc = [[[cu[l][n - 1 - s][x] for x in range(n)] for l in range(n)] for s in range(n)]
    out = []
    for (a, p, b, q), val in sorted(table.entries.items()):
        if not (val == table.entries[(b, q, a, p)]):
            out.append(Issue("Omega symmetry", f"{a},{p};{b},{q}", str(val - table.entries[(b, q, a, p)])))
        ga, gb = cal.grad(a, p), cal.grad(b, q)
        for x in range(n):
            rhs = RF.constant(0, names)
            for s, l in product(range(n), repeat=2):
                if not cc[s][l][x].is_zero():
                    rhs = rhs + ga[s] * gb[l] * cc[s][l][x]
            r = val.diff(names[x]) - rhs
            if not r.is_zero():
                out.append(Issue("Omega derivative", f"{a},{p};{b},{q} d{names[x]}", str(r)))
        if (a, p) == (1, 0):
            r = val - cal.th(b, q)
            if not r.is_zero():
                out.append(Issue("Omega_{1,0} row", f"{b},{q}", str(r)))
    return out


# -- inversion --------------------------------------------------------------------

def delta(alpha: int, n: int) -> int:
    return (alpha == 1) - (alpha == n)


def partner(alpha: int, n: int) -> int:
    """``alpha + (n-1) delta(alpha)``: swaps 1 and n, fixes the middle."""
    return alpha + (n - 1) * delta(alpha, n)


def transform_R(R: Mapping[int, Matrix], n: int, kmax: int) -> dict[int, Matrix]:
    """``(Rh_k)^a_b = (-1)^{[a=1]+[b=1]} (R_{k+delta(a)-delta(b)})^{a'}_{b'}``;
    indices k <= 0 read as zero."""
    out = {}
    for k in range(1, kmax + 1):
        m = [[Fraction(0)] * n for _ in range(n)]
        for a, b in product(range(1, n + 1), repeat=2):
            kk = k + delta(a, n) - delta(b, n)
            if kk <= 0 or kk not in R:
                continue
            sign = (-1) ** ((a == 1) + (b == 1))
            m[a - 1][b - 1] = sign * R[kk][partner(a, n) - 1][partner(b, n) - 1]
        if any(map(any, m)):
            out[k] = tuple(map(tuple, m))
    return out


def transform_calibration(cal: Calibration, cmap: CoordinateMap | None = None,
                          sol_hat: WDVVSolution | None = None) -> Calibration:
    """Calibration of the inverted solution at level ``P - 1``."""
    if cal.level < 2:
        raise LevelError("transform_calibration needs level >= 2")
    sol, n = cal.sol, cal.n
    cmap = cmap or inversion_map(n, sol.prefix)
    sol_hat = sol_hat or invert_solution(sol, cmap.hat_prefix, cmap=cmap)
    L = cal.level - 1
    vn = sol.coordinate(n)
    theta = {}
    for p in range(L + 1):
        for a in range(1, n + 1):
            if a == 1:
                expr = -cal.th(n, p - 1) / vn
            elif a == n:
                expr = cal.th(1, p + 1) / vn
            else:
                expr = cal.th(a, p) / vn
            theta[(a, p)] = cmap.push_forward(expr).with_variables(sol_hat.coordinates)
    cd_hat = transform_conformal(cal.cd) if cal.cd is not None else None
    R_hat = transform_R(cal.R, n, L) if cal.cd is not None else {}
    return Calibration(sol_hat, L, theta, R_hat, cd_hat, ["transformed from " + (sol.name or "calibration")])
