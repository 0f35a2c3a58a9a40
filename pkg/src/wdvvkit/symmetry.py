"""Inversion acting on times, hodograph solutions and tau functions.

The reciprocal time map is

    th^{1,0} = x-hat,  th^{1,p} = -t^{n,p-1},  th^{n,p} = t^{1,p+1},  th^{i,p} = t^{i,p}

for middle ``i``, with the shifts mapped the same way and ``ch^{1,0} = 0``.
``x-hat`` is ``d log tau / dx``, the additive constant being fixed to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .algebra.jets import JetExpression, rational_x_derivative
from .algebra.rational import RationalFunction, jet_name
from .calibration import Calibration, Issue, LevelError, OmegaTable, delta, partner
from .hierarchy import FlowRHS, TimeConfiguration, _Evaluator, flow
from .inversion import CoordinateMap

RF = RationalFunction
Key = tuple[int, int]


class TimeMapError(ValueError):
    pass


def transform_times(config: TimeConfiguration, hat_x: float, n: int) -> TimeConfiguration:
    """Hatted time configuration; ``t^{1,0}`` and ``c^{1,0}`` are absorbed into ``hat_x``."""
    times: dict[Key, float] = {(1, 0): hat_x}
    for (a, p), val in config.times.items():
        if (a, p) == (1, 0):
            continue
        times[_image(a, p, n)] = _sign(a, n) * val
    shifts: dict[Key, Fraction] = {}
    for (a, p), val in config.shifts.items():
        if (a, p) != (1, 0):
            shifts[_image(a, p, n)] = _sign(a, n) * val
    return TimeConfiguration(times, shifts)


def inverse_transform_times(config_hat: TimeConfiguration, x: float, n: int,
                            c10: Fraction = Fraction(0)) -> TimeConfiguration:
    """Inverse of :func:`transform_times`; ``x`` and ``c10`` restore the
    ``(1,0)`` slot, which the forward map does not record."""
    if config_hat.shifts.get((1, 0), 0) != 0:
        raise TimeMapError("ch^{1,0} must vanish")
    times: dict[Key, float] = {(1, 0): x}
    for (a, p), val in config_hat.times.items():
        if (a, p) == (1, 0):
            continue
        times[_preimage(a, p, n)] = _sign(_preimage(a, p, n)[0], n) * val
    shifts = {_preimage(a, p, n): _sign(_preimage(a, p, n)[0], n) * val for (a, p), val in config_hat.shifts.items()}
    shifts[(1, 0)] = Fraction(c10)
    return TimeConfiguration(times, shifts)


def _image(a: int, p: int, n: int) -> Key:
    if a == 1:
        return (n, p - 1)
    if a == n:
        return (1, p + 1)
    return (a, p)


def _preimage(a: int, p: int, n: int) -> Key:
    if a == n:
        return (1, p + 1)
    if a == 1:
        return (n, p - 1)
    return (a, p)


def _sign(a: int, n: int) -> int:
    """Sign picked up by the time ``t^{a,p}`` under the map."""
    return -1 if a == n else 1


def hat_x_of(cal: Calibration, config: TimeConfiguration, v: Sequence[float]) -> float:
    """``sum t~^{a,p} theta_{a,p}(v)``, which equals ``d log tau / dx``."""
    pt = dict(zip(cal.names, v))
    return sum(config.ttilde(k) * cal.th(*k).evaluate(pt) for k in config.active())


def legendre_tau(logtau: float, x: float, dlogtau_dx: float) -> float:
    """``log tau-hat = log tau - x d log tau / dx``; pass the shifted ``x - c^{1,0}``."""
    return logtau - x * dlogtau_dx


def inverse_legendre(logtau_hat: float, x_hat: float, dlogtau_hat_dxhat: float) -> tuple[float, float]:
    """Return ``(x, log tau)`` from the hatted data."""
    return -dlogtau_hat_dxhat, logtau_hat - x_hat * dlogtau_hat_dxhat


def check_prop51(cal_hat: Calibration, config_hat: TimeConfiguration, v_hat: Sequence[float]) -> float:
    """Infinity norm of the hatted hodograph residual at ``v_hat``."""
    keys = config_hat.active()
    ev = _Evaluator(cal_hat, keys)
    r = ev.residual([config_hat.ttilde(k) for k in keys], np.asarray(v_hat, dtype=float))
    return float(np.max(np.abs(r)))


@dataclass(frozen=True)
class LegendreReport:
    x: float
    hat_x: float
    logtau: float
    logtau_hat_legendre: float
    logtau_hat_direct: float
    x_recovered: float
    logtau_recovered: float
    prop51_residual: float

    @property
    def two_sided(self) -> float:
        return abs(self.logtau_hat_legendre - self.logtau_hat_direct)

    @property
    def roundtrip(self) -> float:
        return max(abs(self.x_recovered - self.x), abs(self.logtau_recovered - self.logtau))


def legendre_check(table: OmegaTable, table_hat: OmegaTable, cmap: CoordinateMap,
                   config: TimeConfiguration, v: Sequence[float]) -> LegendreReport:
    """Evaluate both sides of the Legendre law at a hodograph solution ``v``."""
    from .hierarchy import dlogtau, tau_log

    cal, cal_hat = table.cal, table_hat.cal
    n = cal.n
    if abs(v[n - 1]) < 1e-6:
        raise TimeMapError("v^n is too close to 0 for the inversion")
    x = config.ttilde((1, 0))
    logtau = tau_log(table, config, v)
    hx = hat_x_of(cal, config, v)
    cfg_hat = transform_times(config, hx, n)
    v_hat = cmap.forward_point(v)
    direct = tau_log(table_hat, cfg_hat, v_hat)
    via = legendre_tau(logtau, x, hx)
    d_hat = dlogtau(table_hat, cfg_hat, v_hat, (1, 0))
    x_back, logtau_back = inverse_legendre(direct, hx, d_hat)
    res = check_prop51(cal_hat, cfg_hat, v_hat)
    return LegendreReport(x, hx, logtau, via, direct, x_back, logtau_back, res)


def check_omega_relation(table: OmegaTable, table_hat: OmegaTable, cmap: CoordinateMap) -> tuple[int, list[Issue]]:
    """``Omega-hat_{a,p;b,q}(vh(v)) = (-1)^{[a=1]+[b=1]} (Omega_{a',p-delta(a); b',q-delta(b)}
    - theta theta / v^n)`` for every entry whose both sides exist.
    Returns the number of entries compared and the failures."""
    cal = table.cal
    n = cal.n
    vn = cal.sol.coordinate(n)
    count, out = 0, []
    for (a, p, b, q), val in sorted(table_hat.entries.items()):
        a2, p2 = partner(a, n), p - delta(a, n)
        b2, q2 = partner(b, n), q - delta(b, n)
        if p2 + q2 > table.level:
            continue
        sign = (-1) ** ((a == 1) + (b == 1))
        rhs = sign * (table(a2, p2, b2, q2) - cal.th(a2, p2) * cal.th(b2, q2) / vn)
        r = cmap.pull_back(val) - rhs
        count += 1
        if not r.is_zero():
            out.append(Issue("Omega relation", f"{a},{p};{b},{q}", str(r)))
    return count, out


# -- flows under the reciprocal transformation ---------------------------------------

def _directional(f: RationalFunction, velocity: dict, names) -> RationalFunction:
    return sum((f.diff(x) * velocity[i] for i, x in enumerate(names) if x in f.variables),
               RF.constant(0))


def hatted_time_derivative(cal: Calibration, key_hat: Key, f: RationalFunction) -> RationalFunction:
    """``d f / d th^{key}`` for ``f`` a function of v, via the chain rule

    d/dxh = (1/v^n) d/dx,  d/dth^{1,p} = -d_{n,p-1} + (theta_{n,p-1}/v^n) d/dx,
    d/dth^{i,p} = d_{i,p} - (theta_{i,p}/v^n) d/dx,  d/dth^{n,p} = d_{1,p+1} - (theta_{1,p+1}/v^n) d/dx.
    """
    n, names = cal.n, cal.names
    a, p = key_hat
    vn = cal.sol.coordinate(n)
    dx = rational_x_derivative(f)
    if (a, p) == (1, 0):
        return dx / vn

    def along(key: Key) -> RationalFunction:
        fl: FlowRHS = flow(cal, *key)
        vel = fl.velocity()
        return _directional(f, [vel[(cal.sol.prefix, i + 1)] for i in range(n)], names)

    if a == 1:
        return -along((n, p - 1)) + cal.th(n, p - 1) / vn * dx
    if a == n:
        return along((1, p + 1)) - cal.th(1, p + 1) / vn * dx
    return along((a, p)) - cal.th(a, p) / vn * dx


def check_flow_correspondence(cal: Calibration, cal_hat: Calibration, cmap: CoordinateMap,
                              keys_hat: Iterable[Key] | None = None) -> tuple[int, list[Issue]]:
    """Every hatted flow, rewritten in original jets, matches its hydrodynamic form.

    For each ``(a,p)`` and component ``b`` compare ``d vh^b / d th^{a,p}``
    (chain rule above) with ``eta^{bg} (1/v^n) D_x (d theta-hat_{a,p+1}/d vh^g)``.
    """
    n = cal.n
    vn = cal.sol.coordinate(n)
    if keys_hat is None:
        keys_hat = [(a, p) for a in range(1, n + 1) for p in range(cal_hat.level)]
    count, out = 0, []
    for key in keys_hat:
        a, p = key
        if p + 1 > cal_hat.level:
            raise LevelError(f"hatted flow {key} needs level {p + 1}")
        grad_hat = cal_hat.grad(a, p + 1)
        for b in range(n):
            lhs = hatted_time_derivative(cal, key, cmap.forward[b])
            inner = cmap.pull_back(grad_hat[n - 1 - b])
            rhs = rational_x_derivative(inner) / vn
            count += 1
            diff = lhs - rhs
            if not diff.is_zero():
                out.append(Issue("flow correspondence", f"hat flow {a},{p} component {b + 1}", str(diff)))
    return count, out


def jet_symbol(prefix: str, index: int, order: int) -> JetExpression:
    return JetExpression(RF.variable(jet_name(prefix, index, order)))
