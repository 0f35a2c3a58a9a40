"""Text file formats: solutions, calibrations and genus data.

Solution files are ``key = value`` lines with ``#`` comments::

    n = 2
    F = 1/2*v1^2*v2 + v2^4/72
    d = 1/3
    mu = [-1/6, 1/6]

Optional keys: ``prefix`` (default ``v``), ``name``, ``A``, ``B``, ``C``.
A line starting with whitespace continues the previous value.  Every
number is an exact rational; floating point literals are rejected.

Calibration files are sectioned::

    [meta]      n, prefix, name, level, d, mu
    [F]         the prepotential
    [theta alpha=<a> p=<p>]   one expression
    [R k=<k>]   one matrix row per line, entries separated by spaces

Genus files use the solution syntax with the keys ``n``, ``G`` (for
G-functions) or ``F1``, ``F2``, ``F2hat``, ``F2hat_v`` (genus-two data);
values may contain ``log(...)`` and ``LOG_MINUS_ONE``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .algebra.jets import JetExpression
from .algebra.parse import ExpressionError, parse_expression, parse_jet, parse_rational
from .calibration import Calibration
from .frobenius import ConformalData, SolutionError, WDVVSolution, coordinate_names


class FileFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = ""):
        where = f"{source}:" if source else ""
        where += f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


def _read(path_or_text: str | Path) -> tuple[str, str]:
    p = Path(path_or_text) if not isinstance(path_or_text, Path) else path_or_text
    if isinstance(path_or_text, Path) or ("\n" not in str(path_or_text) and p.exists()):
        return p.read_text(), str(p)
    return str(path_or_text), ""


def _strip(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def parse_keyvalues(text: str, source: str = "") -> dict[str, tuple[str, int]]:
    """``key -> (value, line number)``; continuation lines are joined."""
    out: dict[str, tuple[str, int]] = {}
    last = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line.strip():
            continue
        if line[0].isspace() and last is not None:
            val, at = out[last]
            out[last] = (val + " " + line.strip(), at)
            continue
        if "=" not in line:
            raise FileFormatError(f"expected 'key = value', got {line.strip()!r}", no, source)
        key, val = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
            raise FileFormatError(f"bad key {key!r}", no, source)
        if key in out:
            raise FileFormatError(f"duplicate key {key!r}", no, source)
        out[key] = (val, no)
        last = key
    return out


def _rational_list(text: str, line: int, source: str) -> list[Fraction]:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise FileFormatError("expected a bracketed list", line, source)
    body = text[1:-1].strip()
    if not body:
        return []
    try:
        return [parse_rational(x) for x in body.split(",")]
    except ExpressionError as exc:
        raise FileFormatError(str(exc), line, source) from None


def _rational_matrix(text: str, line: int, source: str) -> list[list[Fraction]]:
    rows = re.findall(r"\[([^\[\]]*)\]", text.strip()[1:-1])
    return [_rational_list(f"[{r}]", line, source) for r in rows]


def read_solution(path_or_text: str | Path) -> WDVVSolution:
    text, source = _read(path_or_text)
    kv = parse_keyvalues(text, source)
    unknown = set(kv) - {"n", "F", "d", "mu", "prefix", "name", "A", "B", "C"}
    if unknown:
        k = sorted(unknown)[0]
        raise FileFormatError(f"unknown key {k!r}", kv[k][1], source)
    for req in ("n", "F"):
        if req not in kv:
            raise FileFormatError(f"missing required key {req!r}", None, source)
    n_text, n_line = kv["n"]
    if not re.fullmatch(r"\d+", n_text):
        raise FileFormatError(f"n must be a positive integer, got {n_text!r}", n_line, source)
    n = int(n_text)
    prefix = kv.get("prefix", ("v", 0))[0]
    name = kv.get("name", ("", 0))[0]
    F_text, F_line = kv["F"]
    try:
        F = parse_expression(F_text, coordinate_names(n, prefix))
    except ExpressionError as exc:
        raise FileFormatError(str(exc), F_line, source) from None
    cd = None
    if ("d" in kv) != ("mu" in kv):
        k = "d" if "d" in kv else "mu"
        raise FileFormatError("d and mu must be given together", kv[k][1], source)
    if "d" in kv:
        try:
            d = parse_rational(kv["d"][0])
        except ExpressionError as exc:
            raise FileFormatError(str(exc), kv["d"][1], source) from None
        mu = _rational_list(*kv["mu"], source)
        quad = {}
        if "A" in kv:
            quad["A"] = _rational_matrix(*kv["A"], source)
        if "B" in kv:
            quad["B"] = _rational_list(*kv["B"], source)
        if "C" in kv:
            quad["C"] = parse_rational(kv["C"][0])
        cd = ConformalData(d, tuple(mu), **quad)
    elif any(k in kv for k in "ABC"):
        raise FileFormatError("A, B, C need conformal data (d, mu)", None, source)
    try:
        return WDVVSolution(n, F, prefix, name, cd)
    except SolutionError as exc:
        raise FileFormatError(str(exc), F_line, source) from None


def _fmt_list(xs) -> str:
    return "[" + ", ".join(str(x) for x in xs) + "]"


def format_solution(sol: WDVVSolution, comment: str = "") -> str:
    lines = [f"# {c}" for c in comment.splitlines()] if comment else []
    if sol.name:
        lines.append(f"name = {sol.name}")
    lines.append(f"n = {sol.n}")
    if sol.prefix != "v":
        lines.append(f"prefix = {sol.prefix}")
    lines.append(f"F = {sol.F}")
    cd = sol.conformal
    if cd is not None:
        lines.append(f"d = {cd.d}")
        lines.append(f"mu = {_fmt_list(cd.mu)}")
        if cd.A is not None and any(map(any, cd.A)):
            lines.append("A = [" + ", ".join(_fmt_list(r) for r in cd.A) + "]")
        if cd.B is not None and any(cd.B):
            lines.append(f"B = {_fmt_list(cd.B)}")
        if cd.C:
            lines.append(f"C = {cd.C}")
    return "\n".join(lines) + "\n"


# -- calibrations ------------------------------------------------------------

_HEADER = re.compile(r"^\[(\w+)((?:\s+\w+=-?\d+)*)\s*\]$")


def format_calibration(cal: Calibration) -> str:
    sol = cal.sol
    out = ["[meta]", f"n = {sol.n}", f"prefix = {sol.prefix}"]
    if sol.name:
        out.append(f"name = {sol.name}")
    out.append(f"level = {cal.level}")
    if cal.cd is not None:
        out.append(f"d = {cal.cd.d}")
        out.append(f"mu = {_fmt_list(cal.cd.mu)}")
    out += ["", "[F]", str(sol.F)]
    for p in range(cal.level + 1):
        for a in range(1, sol.n + 1):
            out += ["", f"[theta alpha={a} p={p}]", str(cal.th(a, p))]
    for k in sorted(cal.R):
        out += ["", f"[R k={k}]"]
        out += [" ".join(str(x) for x in row) for row in cal.R[k]]
    return "\n".join(out) + "\n"


def read_calibration(path_or_text: str | Path) -> Calibration:
    text, source = _read(path_or_text)
    sections: list[tuple[str, dict, int, list[tuple[int, str]]]] = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw).strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            attrs = dict(kv.split("=") for kv in m.group(2).split())
            sections.append((m.group(1), {k: int(v) for k, v in attrs.items()}, no, []))
        elif not sections:
            raise FileFormatError("content before the first section header", no, source)
        else:
            sections[-1][3].append((no, line))
    by_kind: dict[str, list] = {}
    for s in sections:
        by_kind.setdefault(s[0], []).append(s)
    unknown = set(by_kind) - {"meta", "F", "theta", "R"}
    if unknown:
        s = by_kind[sorted(unknown)[0]][0]
        raise FileFormatError(f"unknown section [{s[0]}]", s[2], source)
    if "meta" not in by_kind or "F" not in by_kind:
        raise FileFormatError("calibration files need [meta] and [F] sections", None, source)
    meta_lines = by_kind["meta"][0][3]
    meta: dict[str, tuple[str, int]] = {}
    for no, line in meta_lines:
        if "=" not in line:
            raise FileFormatError(f"expected 'key = value', got {line!r}", no, source)
        k, v = (x.strip() for x in line.split("=", 1))
        meta[k] = (v, no)
    try:
        n = int(meta["n"][0])
        level = int(meta["level"][0])
    except (KeyError, ValueError):
        raise FileFormatError("[meta] needs integer n and level", by_kind["meta"][0][2], source) from None
    prefix = meta.get("prefix", ("v", 0))[0]
    names = coordinate_names(n, prefix)

    def expr(section) -> object:
        body = " ".join(l for _, l in section[3])
        try:
            return parse_expression(body, names)
        except ExpressionError as exc:
            raise FileFormatError(str(exc), section[3][0][0] if section[3] else section[2], source) from None

    cd = None
    if "d" in meta:
        cd = ConformalData(parse_rational(meta["d"][0]), tuple(_rational_list(*meta["mu"], source)))
    try:
        sol = WDVVSolution(n, expr(by_kind["F"][0]), prefix, meta.get("name", ("", 0))[0], cd)
    except SolutionError as exc:
        raise FileFormatError(str(exc), by_kind["F"][0][2], source) from None
    theta = {}
    for s in by_kind.get("theta", []):
        key = (s[1].get("alpha"), s[1].get("p"))
        if None in key:
            raise FileFormatError("theta sections need alpha= and p=", s[2], source)
        theta[key] = expr(s)
    missing = [(a, p) for p in range(level + 1) for a in range(1, n + 1) if (a, p) not in theta]
    if missing:
        raise FileFormatError(f"theta_{missing[0][0]},{missing[0][1]} is missing", None, source)
    R = {}
    for s in by_kind.get("R", []):
        rows = []
        for no, line in s[3]:
            try:
                rows.append(tuple(parse_rational(x) for x in line.split()))
            except ExpressionError as exc:
                raise FileFormatError(str(exc), no, source) from None
        if len(rows) != n or any(len(r) != n for r in rows):
            raise FileFormatError(f"R_{s[1].get('k')} must be {n}x{n}", s[2], source)
        R[s[1]["k"]] = tuple(rows)
    return Calibration(sol, level, theta, R, cd)


# -- genus data ----------------------------------------------------------------

@dataclass(frozen=True)
class GenusData:
    n: int | None
    entries: dict[str, JetExpression]

    def get(self, key: str) -> JetExpression | None:
        return self.entries.get(key)


def read_genus_data(path_or_text: str | Path) -> GenusData:
    text, source = _read(path_or_text)
    kv = parse_keyvalues(text, source)
    n = None
    entries = {}
    for key, (val, no) in kv.items():
        if key == "n":
            n = int(val)
            continue
        if key == "name":
            continue
        if key not in {"G", "F1", "F2", "F2hat", "F2hat_v"}:
            raise FileFormatError(f"unknown key {key!r}", no, source)
        try:
            entries[key] = parse_jet(val)
        except ExpressionError as exc:
            raise FileFormatError(str(exc), no, source) from None
    return GenusData(n, entries)
