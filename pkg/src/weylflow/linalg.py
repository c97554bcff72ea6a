"""Exact sparse Gaussian elimination over the rationals.

Rows arrive as sparse mappings column -> Fraction plus a right-hand-side
entry; the solver keeps an incremental row-echelon basis with unit pivots,
from which rank, consistency, and a nullspace basis of the homogeneous part
are read off.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional, Sequence


class EchelonSystem:
    """Incremental echelon form of a sparse linear system A c = b."""

    def __init__(self, n_cols: int):
        self.n_cols = n_cols
        self.pivots: dict[int, dict[int, Fraction]] = {}   # pivot col -> row
        self.rhs: dict[int, Fraction] = {}                 # pivot col -> rhs
        self.inconsistent = False
        self.rows_seen = 0

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def nullity(self) -> int:
        return self.n_cols - self.rank

    def add_row(self, row: Mapping[int, Fraction],
                rhs: Fraction = Fraction(0)) -> None:
        self.rows_seen += 1
        work = {c: v for c, v in row.items() if v}
        while work:
            lead = min(work)
            pivot_row = self.pivots.get(lead)
            if pivot_row is None:
                scale = work[lead]
                new_row = {c: v / scale for c, v in work.items()}
                self.pivots[lead] = new_row
                self.rhs[lead] = rhs / scale
                return
            factor = work[lead]
            for c, v in pivot_row.items():
                s = work.get(c, Fraction(0)) - factor * v
                if s:
                    work[c] = s
                elif c in work:
                    del work[c]
            rhs = rhs - factor * self.rhs[lead]
        if rhs != 0:
            self.inconsistent = True

    def residual(self, row: Mapping[int, Fraction], rhs: Fraction,
                 solution: Sequence[Fraction]) -> Fraction:
        total = -rhs
        for c, v in row.items():
            if solution[c]:
                total += v * solution[c]
        return total

    def nullspace(self) -> list[list[Fraction]]:
        """Basis of the homogeneous nullspace, one vector per free column."""
        pivot_cols = sorted(self.pivots)
        pivot_set = set(pivot_cols)
        free_cols = [c for c in range(self.n_cols) if c not in pivot_set]
        basis = []
        zero = Fraction(0)
        for f in free_cols:
            vec = [zero] * self.n_cols
            vec[f] = Fraction(1)
            # echelon rows only reference columns right of their pivot, so
            # walking pivots from the largest column upward back-substitutes
            for p in reversed(pivot_cols):
                row = self.pivots[p]
                s = zero
                for c, v in row.items():
                    if c != p and vec[c]:
                        s += v * vec[c]
                if s:
                    vec[p] = -s
            basis.append(vec)
        return basis

    def particular_solution(self) -> Optional[list[Fraction]]:
        """One solution of A c = b with free columns set to zero."""
        if self.inconsistent:
            return None
        zero = Fraction(0)
        vec = [zero] * self.n_cols
        for p in reversed(sorted(self.pivots)):
            row = self.pivots[p]
            s = -self.rhs[p]
            for c, v in row.items():
                if c != p and vec[c]:
                    s += v * vec[c]
            vec[p] = -s
        return vec
