"""Exact LLL basis reduction driven by the Gram matrix alone.

The lattice is never touched: reduction produces a unimodular transform
``u`` with ``u * G * u^T`` LLL-reduced (delta = 3/4), all arithmetic in
``Fraction``.  Positive definiteness is detected as a side effect: a
non-positive Gram-Schmidt norm raises ``NotPositiveDefiniteError``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from perflat.exact import IntMatrix, Matrix, int_identity, mat

DELTA = Fraction(3, 4)


class NotPositiveDefiniteError(ValueError):
    """Gram matrix is not positive definite."""


@dataclass(frozen=True)
class ReducedGram:
    u: IntMatrix          # unimodular, rows express reduced basis in input basis
    gram: Matrix          # u * G * u^T


def _gram_schmidt(g: list[list[Fraction]]):
    """Return (mu, b) with mu unit lower triangular, b the GS norms."""
    n = len(g)
    mu = [[Fraction(0)] * n for _ in range(n)]
    b = [Fraction(0)] * n
    for i in range(n):
        for j in range(i):
            s = g[i][j] - sum(mu[i][k] * mu[j][k] * b[k] for k in range(j))
            mu[i][j] = s / b[j]
        b[i] = g[i][i] - sum(mu[i][k] ** 2 * b[k] for k in range(i))
        if b[i] <= 0:
            raise NotPositiveDefiniteError("Gram matrix is not positive definite")
        mu[i][i] = Fraction(1)
    return mu, b


def lll_reduce(gram, delta: Fraction = DELTA) -> ReducedGram:
    """LLL-reduce a positive definite rational Gram matrix.

    Size reduction updates the mu row of the reduced vector in place
    (the Gram-Schmidt data of the earlier rows is unaffected); the full
    orthogonalization is recomputed only after a swap.
    """
    g = [list(row) for row in mat(gram)]
    n = len(g)
    u = [list(r) for r in int_identity(n)]

    def size_reduce_row(i: int, j: int, mu) -> None:
        r = round(mu[i][j])
        if r == 0:
            return
        u[i] = [x - r * y for x, y in zip(u[i], u[j])]
        for k in range(n):
            g[i][k] -= r * g[j][k]
        for k in range(n):
            g[k][i] -= r * g[k][j]
        for k in range(j + 1):
            mu[i][k] -= r * mu[j][k]

    mu, b = _gram_schmidt(g)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            if abs(mu[k][j]) > Fraction(1, 2):
                size_reduce_row(k, j, mu)
        if b[k] >= (delta - mu[k][k - 1] ** 2) * b[k - 1]:
            k += 1
        else:
            g[k], g[k - 1] = g[k - 1], g[k]
            for row in g:
                row[k], row[k - 1] = row[k - 1], row[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            mu, b = _gram_schmidt(g)
            k = max(k - 1, 1)
    return ReducedGram(tuple(tuple(r) for r in u), tuple(tuple(r) for r in g))
