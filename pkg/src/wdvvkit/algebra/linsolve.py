"""Exact Gaussian elimination over Q."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class InconsistentSystemError(ValueError):
    def __init__(self, row: int):
        super().__init__(f"equation {row} is inconsistent with the preceding ones")
        self.row = row


def solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction], *, require_unique: bool = False):
    """Solve ``rows @ x = rhs`` exactly.

    Returns ``(x, free)`` where ``free`` lists the indices of free unknowns;
    free unknowns are set to zero (the minimal-support particular solution).
    Raises :class:`InconsistentSystemError` naming the first equation that
    cannot be satisfied, or ``ValueError`` if ``require_unique`` and some
    unknown is free.
    """
    ncols = len(rows[0]) if rows else 0
    pivots: list[tuple[int, list[Fraction], Fraction]] = []  # (pivot col, row, rhs), row reduced
    for r, (row, b) in enumerate(zip(rows, rhs)):
        vec = [Fraction(x) for x in row]
        val = Fraction(b)
        for col, prow, pval in pivots:
            f = vec[col]
            if f:
                vec = [x - f * y for x, y in zip(vec, prow)]
                val -= f * pval
        lead = next((j for j, x in enumerate(vec) if x), None)
        if lead is None:
            if val:
                raise InconsistentSystemError(r)
            continue
        inv = 1 / vec[lead]
        vec = [x * inv for x in vec]
        val *= inv
        # keep previous pivot rows reduced in the new column
        new_pivots = []
        for col, prow, pval in pivots:
            f = prow[lead]
            if f:
                prow = [x - f * y for x, y in zip(prow, vec)]
                pval -= f * val
            new_pivots.append((col, prow, pval))
        pivots = new_pivots + [(lead, vec, val)]
    x = [Fraction(0)] * ncols
    pivot_cols = set()
    for col, prow, pval in pivots:
        x[col] = pval
        pivot_cols.add(col)
    free = [j for j in range(ncols) if j not in pivot_cols]
    if require_unique and free:
        raise ValueError(f"underdetermined system: unknowns {free} are free")
    return x, free
