"""Exact rational linear algebra for integer vectors."""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

Vector = Tuple[int, ...]


def rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank over Q by fraction-exact Gaussian elimination."""
    m = [[Fraction(v) for v in row] for row in rows]
    if not m:
        return 0
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c] / m[r][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return r


def matvec(W: Sequence[Sequence[int]], x: Sequence[int]) -> Vector:
    return tuple(sum(a * b for a, b in zip(row, x)) for row in W)


class SpanMap:
    """Linear map learned from input/output pairs, kept in reduced row echelon form.

    Each stored row is an input vector ``u`` (rational, with a unit pivot and
    zeros in every other row's pivot column) together with its image ``v``.
    """

    def __init__(self, n: int):
        self.n = n
        self.rows: List[Tuple[List[Fraction], List[Fraction], int]] = []

    def __len__(self) -> int:
        return len(self.rows)

    def _reduce(self, x: Sequence[int]) -> Tuple[List[Fraction], List[Fraction]]:
        res = [Fraction(v) for v in x]
        img = [Fraction(0)] * self.n
        for u, v, p in self.rows:
            c = res[p]
            if c:
                res = [a - c * b for a, b in zip(res, u)]
                img = [a + c * b for a, b in zip(img, v)]
        return res, img

    def predict(self, x: Sequence[int]) -> Optional[Vector]:
        """Image of x when x lies in the span of stored inputs and the image is integral."""
        res, img = self._reduce(x)
        if any(res):
            return None
        if any(v.denominator != 1 for v in img):
            return None
        return tuple(int(v) for v in img)

    def add(self, x: Sequence[int], y: Sequence[int]) -> bool:
        """Record x -> y; returns True when x was independent of the stored inputs."""
        res, img = self._reduce(x)
        if not any(res):
            return False
        out = [Fraction(a) - b for a, b in zip(y, img)]
        p = next(i for i, a in enumerate(res) if a)
        c = res[p]
        u = [a / c for a in res]
        v = [a / c for a in out]
        new_rows = []
        for ru, rv, rp in self.rows:
            k = ru[p]
            if k:
                ru = [a - k * b for a, b in zip(ru, u)]
                rv = [a - k * b for a, b in zip(rv, v)]
            new_rows.append((ru, rv, rp))
        new_rows.append((u, v, p))
        self.rows = new_rows
        return True
