"""Principal hierarchy: flows, hodograph solutions and genus-zero tau functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra.jets import JetExpression, evolutionary_derivative
from .algebra.rational import RationalFunction, jet_name
from .calibration import Calibration, LevelError, OmegaTable

RF = RationalFunction
Key = tuple[int, int]


class HodographError(RuntimeError):
    pass


class ConvergenceError(HodographError):
    pass


class SingularJacobianError(HodographError):
    """The genericity condition fails: the hodograph Jacobian is singular."""


# -- flows -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlowRHS:
    """``d v^g / d t^{alpha,p} = A[g][x] v^x_x`` (0-based matrix)."""

    alpha: int
    p: int
    A: tuple[tuple[RationalFunction, ...], ...]
    prefix: str = "v"

    def velocity(self) -> dict[tuple[str, int], RationalFunction]:
        n = len(self.A)
        names = [f"{self.prefix}{i}" for i in range(1, n + 1)] + [jet_name(self.prefix, i, 1) for i in range(1, n + 1)]
        out = {}
        for g in range(n):
            acc = RF.constant(0, names)
            for x in range(n):
                if not self.A[g][x].is_zero():
                    acc = acc + self.A[g][x] * RF.variable(jet_name(self.prefix, x + 1, 1), names)
            out[(self.prefix, g + 1)] = acc
        return out


def flow(cal: Calibration, alpha: int, p: int) -> FlowRHS:
    if p + 1 > cal.level:
        raise LevelError(f"flow ({alpha},{p}) needs theta at level {p + 1}, calibration has {cal.level}")
    n = cal.n
    h = cal.hess(alpha, p + 1)
    A = tuple(tuple(h[n - 1 - g][x] for x in range(n)) for g in range(n))
    return FlowRHS(alpha, p, A, cal.sol.prefix)


def flow_commutator(fa: FlowRHS, fb: FlowRHS) -> list[JetExpression]:
    """Components of ``d_a (V_b) - d_b (V_a)`` on jets; all zero iff the flows commute."""
    va, vb = fa.velocity(), fb.velocity()
    return [evolutionary_derivative(vb[k], va) - evolutionary_derivative(va[k], vb) for k in sorted(va)]


def check_flows_commute(cal: Calibration, keys: Iterable[Key]) -> list[tuple[Key, Key, int]]:
    """Pairs of flows whose commutator has a nonzero component ``(a, b, gamma)``."""
    flows = {k: flow(cal, *k) for k in keys}
    bad = []
    for a, b in combinations_with_replacement(sorted(flows), 2):
        if a == b:
            continue
        for g, c in enumerate(flow_commutator(flows[a], flows[b]), start=1):
            if not c.is_zero():
                bad.append((a, b, g))
    return bad


# -- time data ---------------------------------------------------------------

@dataclass(frozen=True)
class TimeConfiguration:
    """Sparse times ``t^{a,p}`` and exact shifts ``c^{a,p}``."""

    times: Mapping[Key, float] = field(default_factory=dict)
    shifts: Mapping[Key, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "times", {k: float(v) for k, v in sorted(self.times.items()) if v != 0})
        object.__setattr__(self, "shifts", {k: Fraction(v) for k, v in sorted(self.shifts.items()) if v != 0})

    def t(self, key: Key) -> float:
        return self.times.get(key, 0.0)

    def ttilde(self, key: Key) -> float:
        return self.times.get(key, 0.0) - float(self.shifts.get(key, 0))

    def active(self) -> list[Key]:
        """Keys with nonzero shifted time."""
        keys = sorted(set(self.times) | set(self.shifts))
        return [k for k in keys if self.ttilde(k) != 0]

    def max_level(self) -> int:
        return max((p for _, p in self.active()), default=0)

    def with_time(self, key: Key, value: float) -> "TimeConfiguration":
        times = dict(self.times)
        times[key] = value
        return TimeConfiguration(times, self.shifts)

    def shifted(self, key: Key, delta: float) -> "TimeConfiguration":
        return self.with_time(key, self.t(key) + delta)

    def describe(self) -> str:
        t = ", ".join(f"t{a},{p}={v!r}" for (a, p), v in self.times.items())
        c = ", ".join(f"c{a},{p}={v}" for (a, p), v in self.shifts.items())
        return f"times[{t}] shifts[{c}]"


@dataclass(frozen=True)
class HodographSolution:
    config: TimeConfiguration
    v: tuple[float, ...]
    residual_norm: float
    iterations: int
    jacobian_det: float


class _Evaluator:
    """Float evaluation of gradients and Hessians of the theta's."""

    def __init__(self, cal: Calibration, keys: Sequence[Key]):
        for a, p in keys:
            if p > cal.level:
                raise LevelError(f"time ({a},{p}) exceeds calibration level {cal.level}")
        self.cal = cal
        self.keys = list(keys)
        self.names = cal.names

    def point(self, v) -> dict[str, float]:
        return dict(zip(self.names, v))

    def residual(self, weights, v) -> np.ndarray:
        pt = self.point(v)
        out = np.zeros(self.cal.n)
        for key, w in zip(self.keys, weights):
            out += w * np.array([g.evaluate(pt) for g in self.cal.grad(*key)])
        return out

    def jacobian(self, weights, v) -> np.ndarray:
        pt = self.point(v)
        n = self.cal.n
        out = np.zeros((n, n))
        for key, w in zip(self.keys, weights):
            h = self.cal.hess(*key)
            out += w * np.array([[h[i][j].evaluate(pt) for j in range(n)] for i in range(n)])
        return out


def hodograph_solve(cal: Calibration, config: TimeConfiguration, guess: Sequence[float], *,
                    tol: float = 1e-12, max_iter: int = 50) -> HodographSolution:
    """Solve ``sum t~^{a,p} d theta_{a,p} / d v^g = 0`` by damped Newton.

    After the tolerance is met, iteration continues while the residual
    still decreases, so the answer sits at machine precision.
    """
    keys = config.active()
    if not keys:
        raise HodographError("no active times: every point solves the trivial system")
    ev = _Evaluator(cal, keys)
    w = [config.ttilde(k) for k in keys]
    v = np.array(guess, dtype=float)
    if v.shape != (cal.n,):
        raise HodographError(f"guess must have {cal.n} entries")
    r = ev.residual(w, v)
    norm = np.max(np.abs(r))
    it = 0
    met_at = None
    while it < max_iter:
        if norm <= tol and met_at is None:
            met_at = it
        if met_at is not None and (norm == 0.0 or it - met_at >= 3):
            break
        J = ev.jacobian(w, v)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise SingularJacobianError(f"singular Jacobian at v={v.tolist()}") from None
        it += 1
        lam = 1.0
        for _ in range(40):
            cand = v + lam * step
            rc = ev.residual(w, cand)
            nc = np.max(np.abs(rc))
            if nc <= norm or not np.isfinite(norm):
                break
            lam *= 0.5
        if nc >= norm and met_at is not None:
            break  # no further progress at machine precision
        v, r, norm = cand, rc, nc
    if norm > tol:
        raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (residual {norm:.3e})")
    det = float(np.linalg.det(ev.jacobian(w, v)))
    if det == 0.0:
        raise SingularJacobianError("hodograph Jacobian is singular at the solution")
    return HodographSolution(config, tuple(float(x) for x in v), float(norm), it, det)


# -- tau function ------------------------------------------------------------------

def _omega_float(table: OmegaTable, a: Key, b: Key, pt) -> float:
    if not table.available(a[1], b[1]):
        raise LevelError(f"Omega_{a};{b} is outside the table (level {table.level})")
    return table(a[0], a[1], b[0], b[1]).evaluate(pt)


def tau_log(table: OmegaTable, config: TimeConfiguration, v: Sequence[float]) -> float:
    """``1/2 sum t~ t~ Omega(v)`` over the active times."""
    pt = dict(zip(table.cal.names, v))
    keys = config.active()
    total = 0.0
    for i, a in enumerate(keys):
        for b in keys[i:]:
            w = config.ttilde(a) * config.ttilde(b) * _omega_float(table, a, b, pt)
            total += w if a == b else 2 * w
    return 0.5 * total


def tau_log_expression(table: OmegaTable, config: TimeConfiguration) -> RationalFunction:
    """The same sum as an exact function of v (times converted exactly)."""
    keys = config.active()
    expr = RF.constant(0, table.cal.names)
    tt = {k: Fraction(config.t(k)) - config.shifts.get(k, 0) for k in keys}
    for a in keys:
        for b in keys:
            if not table.available(a[1], b[1]):
                raise LevelError(f"Omega_{a};{b} is outside the table (level {table.level})")
            expr = expr + Fraction(1, 2) * tt[a] * tt[b] * table(a[0], a[1], b[0], b[1])
    return expr


def dlogtau(table: OmegaTable, config: TimeConfiguration, v: Sequence[float], key: Key) -> float:
    """``d log tau / d t^{key} = sum t~^{b} Omega_{key; b}(v)``."""
    pt = dict(zip(table.cal.names, v))
    return sum(config.ttilde(b) * _omega_float(table, key, b, pt) for b in config.active())


@dataclass(frozen=True)
class TauDefEntry:
    a: Key
    b: Key
    finite_difference: float
    omega: float

    @property
    def deviation(self) -> float:
        return abs(self.finite_difference - self.omega)


@dataclass(frozen=True)
class TauDefReport:
    h: float
    entries: tuple[TauDefEntry, ...]

    @property
    def max_deviation(self) -> float:
        return max((e.deviation for e in self.entries), default=0.0)


def default_directions(table: OmegaTable, config: TimeConfiguration) -> list[Key]:
    """All (a,0) and active keys whose pairwise Omega entries exist."""
    n = table.cal.n
    cand = sorted(set(config.active()) | {(a, 0) for a in range(1, n + 1)})
    active_top = config.max_level()
    return [k for k in cand if 2 * k[1] <= table.level and k[1] + active_top <= table.level]


def check_tau_def(cal: Calibration, table: OmegaTable, config: TimeConfiguration, h: float,
                  guess: Sequence[float], directions: Sequence[Key] | None = None,
                  base: HodographSolution | None = None) -> TauDefReport:
    """Second central differences of log tau against ``Omega(v(t))``."""
    dirs = list(directions) if directions is not None else default_directions(table, config)
    base = base or hodograph_solve(cal, config, guess)
    pt = dict(zip(cal.names, base.v))
    cache: dict = {}

    def logtau(shifts: tuple[tuple[Key, float], ...]) -> float:
        if shifts not in cache:
            cfg = config
            for k, d in shifts:
                cfg = cfg.shifted(k, d)
            sol = hodograph_solve(cal, cfg, base.v)
            cache[shifts] = tau_log(table, cfg, sol.v)
        return cache[shifts]

    entries = []
    for i, a in enumerate(dirs):
        for b in dirs[i:]:
            if a == b:
                fd = (logtau(((a, h),)) - 2 * logtau(()) + logtau(((a, -h),))) / h ** 2
            else:
                fd = (logtau(((a, h), (b, h))) - logtau(((a, h), (b, -h)))
                      - logtau(((a, -h), (b, h))) + logtau(((a, -h), (b, -h)))) / (4 * h * h)
            om = table(a[0], a[1], b[0], b[1]).evaluate(pt)
            entries.append(TauDefEntry(a, b, fd, om))
    return TauDefReport(h, tuple(entries))


def richardson_ratio(cal, table, config, h, guess, directions=None) -> tuple[float, TauDefReport, TauDefReport]:
    """Deviation at ``h`` over deviation at ``h/2``; about 4 for a second-order scheme."""
    base = hodograph_solve(cal, config, guess)
    r1 = check_tau_def(cal, table, config, h, guess, directions, base)
    r2 = check_tau_def(cal, table, config, h / 2, guess, directions, base)
    return r1.max_deviation / r2.max_deviation, r1, r2
