"""Exact integer linear algebra (fraction-free elimination on Python ints)."""

from __future__ import annotations

from typing import Sequence

IntRows = Sequence[Sequence[int]]


def _as_int_rows(a) -> list[list[int]]:
    return [[int(x) for x in row] for row in a]


def integer_rank(a: IntRows) -> int:
    """Rank over the rationals via Bareiss fraction-free elimination."""
    m = _as_int_rows(a)
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        if rank == nrows:
            break
        pivot = next((r for r in range(rank, nrows) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        p = m[rank][col]
        for r in range(rank + 1, nrows):
            for c in range(col + 1, ncols):
                # exact division is guaranteed by Sylvester's identity
                m[r][c] = (p * m[r][c] - m[r][col] * m[rank][c]) // prev
            m[r][col] = 0
        prev = p
        rank += 1
    return rank


def integer_det(a: IntRows) -> int:
    """Determinant of a square integer matrix (Bareiss algorithm)."""
    m = _as_int_rows(a)
    n = len(m)
    if n == 0:
        return 1
    if any(len(row) != n for row in m):
        raise ValueError("determinant needs a square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[k][k] * m[i][j] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def leading_minors(a: IntRows) -> list[int]:
    """Determinants of the leading principal submatrices A[:m, :m], m = 1..L."""
    m = _as_int_rows(a)
    return [integer_det([row[:k] for row in m[:k]]) for k in range(1, len(m) + 1)]


def has_full_leading_rank(a: IntRows) -> bool:
    return all(d != 0 for d in leading_minors(a))
