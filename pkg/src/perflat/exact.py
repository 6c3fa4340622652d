"""Exact integer and rational linear algebra.

Matrices are nested tuples of ``fractions.Fraction`` (or plain ``int``
for the integer-only routines), vectors are rows, and nothing in this
module ever rounds.  Determinants use fraction-free Bareiss elimination
to bound intermediate growth; Hermite and Smith normal forms record the
unimodular transforms that witness them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

Rat = Fraction
Vec = tuple[Rat, ...]
Matrix = tuple[Vec, ...]
IntVec = tuple[int, ...]
IntMatrix = tuple[IntVec, ...]


class SingularMatrixError(ZeroDivisionError):
    """Inverse or solve requested for a matrix with determinant zero."""


class NotPrimeError(ValueError):
    """A modulus that must be prime is not."""


def mat(rows) -> Matrix:
    """Normalize nested iterables into a tuple-of-tuples of Fraction."""
    out = tuple(tuple(Fraction(x) for x in row) for row in rows)
    if out and any(len(r) != len(out[0]) for r in out):
        raise ValueError("ragged matrix")
    return out


def int_mat(rows) -> IntMatrix:
    """Normalize into an integer matrix, rejecting non-integers."""
    out = []
    for row in rows:
        new = []
        for x in row:
            f = Fraction(x)
            if f.denominator != 1:
                raise ValueError(f"non-integer entry {x}")
            new.append(int(f))
        out.append(tuple(new))
    if out and any(len(r) != len(out[0]) for r in out):
        raise ValueError("ragged matrix")
    return tuple(out)


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def int_identity(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def transpose(m) -> Matrix:
    return tuple(zip(*m))


def dot(u, v) -> Rat:
    return sum(a * b for a, b in zip(u, v))


def mat_mul(a, b) -> Matrix:
    bt = tuple(zip(*b))
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def mat_vec(m, v) -> Vec:
    return tuple(dot(row, v) for row in m)


def vec_mat(v, m) -> Vec:
    return tuple(dot(v, col) for col in zip(*m))


def mat_sub(a, b) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def scale(m, c) -> Matrix:
    c = Fraction(c)
    return tuple(tuple(c * x for x in row) for row in m)


def is_symmetric(m) -> bool:
    return all(m[i][j] == m[j][i] for i in range(len(m)) for j in range(i))


def denominator_lcm(m) -> int:
    """Least common multiple of all entry denominators (1 for empty)."""
    d = 1
    for row in m:
        for x in row:
            d = lcm(d, Fraction(x).denominator)
    return d


def clear_denominators(m) -> tuple[IntMatrix, int]:
    """Return (d*m, d) with d the lcm of denominators, d*m integral."""
    d = denominator_lcm(m)
    return tuple(tuple(int(Fraction(x) * d) for x in row) for row in m), d


def det(m) -> Rat:
    """Exact determinant by fraction-free Bareiss elimination."""
    n = len(m)
    if n == 0:
        return Fraction(1)
    if any(len(row) != n for row in m):
        raise ValueError("determinant of a non-square matrix")
    a, d = clear_denominators(m)
    return Fraction(_det_bareiss(list(list(r) for r in a)), d**n)


def _det_bareiss(a: list[list[int]]) -> int:
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i = a[i]
            row_k = a[k]
            for j in range(k + 1, n):
                # exact division is guaranteed by the Bareiss identity
                row_i[j] = (row_i[j] * pivot - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
    return sign * a[n - 1][n - 1]


def inverse(m) -> Matrix:
    """Exact inverse via Gauss-Jordan; raises SingularMatrixError."""
    n = len(m)
    a = [list(Fraction(x) for x in row) + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(m)]
    for col in range(n):
        piv = next((i for i in range(col, n) if a[i][col] != 0), None)
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv_p = 1 / a[col][col]
        a[col] = [x * inv_p for x in a[col]]
        for i in range(n):
            if i != col and a[i][col] != 0:
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[col])]
    return tuple(tuple(row[n:]) for row in a)


def solve_left(m, v) -> Vec:
    """Solve x * m = v exactly (m square nonsingular)."""
    return vec_mat(v, inverse(m))


@dataclass(frozen=True)
class HnfResult:
    """Row-style Hermite normal form h with unimodular u, u * input = h."""

    h: IntMatrix
    u: IntMatrix
    pivots: tuple[tuple[int, int], ...]  # (row, col) of each pivot

    @property
    def rank(self) -> int:
        return len(self.pivots)


def hnf(m) -> HnfResult:
    """Row HNF: positive pivots, entries above a pivot reduced to [0, pivot).

    Zero rows sink to the bottom.  The transform u satisfies u*m = h and
    det(u) = +-1, so the row space (as a lattice) is preserved exactly.
    """
    a = [list(r) for r in int_mat(m)]
    nr = len(a)
    nc = len(a[0]) if nr else 0
    u = [list(r) for r in int_identity(nr)]
    row = 0
    pivots: list[tuple[int, int]] = []
    for col in range(nc):
        # clear everything below `row` in this column by gcd steps
        piv = next((i for i in range(row, nr) if a[i][col] != 0), None)
        if piv is None:
            continue
        if piv != row:
            a[row], a[piv] = a[piv], a[row]
            u[row], u[piv] = u[piv], u[row]
        for i in range(row + 1, nr):
            while a[i][col] != 0:
                q = a[row][col] // a[i][col]
                a[row], a[i] = a[i], [x - q * y for x, y in zip(a[row], a[i])]
                u[row], u[i] = u[i], [x - q * y for x, y in zip(u[row], u[i])]
        if a[row][col] < 0:
            a[row] = [-x for x in a[row]]
            u[row] = [-x for x in u[row]]
        for i in range(row):
            q = a[i][col] // a[row][col]
            if q:
                a[i] = [x - q * y for x, y in zip(a[i], a[row])]
                u[i] = [x - q * y for x, y in zip(u[i], u[row])]
        pivots.append((row, col))
        row += 1
        if row == nr:
            break
    return HnfResult(tuple(tuple(r) for r in a), tuple(tuple(r) for r in u),
                     tuple(pivots))


@dataclass(frozen=True)
class SnfResult:
    """Smith normal form: s * input * t = diag(d), d_1 | d_2 | ... ."""

    d: tuple[int, ...]
    s: IntMatrix
    t: IntMatrix


def snf(m) -> SnfResult:
    """Smith normal form with recorded unimodular transforms."""
    a = [list(r) for r in int_mat(m)]
    nr = len(a)
    nc = len(a[0]) if nr else 0
    s = [list(r) for r in int_identity(nr)]
    t = [list(r) for r in int_identity(nc)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        s[i], s[j] = s[j], s[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in t:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):
        a[dst] = [x + q * y for x, y in zip(a[dst], a[src])]
        s[dst] = [x + q * y for x, y in zip(s[dst], s[src])]

    def add_col(dst, src, q):
        for row in a:
            row[dst] += q * row[src]
        for row in t:
            row[dst] += q * row[src]

    def diagonalize(start: int) -> int:
        k = start
        while k < min(nr, nc):
            piv = next(((i, j) for i in range(k, nr) for j in range(k, nc)
                        if a[i][j] != 0), None)
            if piv is None:
                break
            if piv[0] != k:
                swap_rows(k, piv[0])
            if piv[1] != k:
                swap_cols(k, piv[1])
            while True:
                for i in range(k + 1, nr):
                    while a[i][k] != 0:
                        q = a[i][k] // a[k][k]
                        add_row(i, k, -q)
                        if a[i][k] != 0:
                            swap_rows(k, i)
                for j in range(k + 1, nc):
                    while a[k][j] != 0:
                        q = a[k][j] // a[k][k]
                        add_col(j, k, -q)
                        if a[k][j] != 0:
                            swap_cols(k, j)
                if all(a[i][k] == 0 for i in range(k + 1, nr)):
                    break
            if a[k][k] < 0:
                a[k] = [-x for x in a[k]]
                s[k] = [-x for x in s[k]]
            k += 1
        return k

    rank = diagonalize(0)

    # enforce the divisibility chain: couple offending pairs and re-clear
    while True:
        bad = next((i for i in range(rank - 1)
                    if a[i + 1][i + 1] % a[i][i] != 0), None)
        if bad is None:
            break
        add_col(bad, bad + 1, 1)
        rank = diagonalize(bad)

    d = tuple(a[i][i] for i in range(min(nr, nc)))
    return SnfResult(d, tuple(tuple(r) for r in s), tuple(tuple(r) for r in t))


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def kernel_mod_p(m, p: int) -> tuple[IntVec, ...]:
    """Echelonized basis of the right null space {x : m x = 0 over F_p}.

    Pivots are chosen left to right, so the result is deterministic; the
    basis vectors have entries in [0, p) and are ordered by free column.
    """
    if not is_prime(p):
        raise NotPrimeError(f"{p} is not prime")
    a = [[x % p for x in row] for row in int_mat(m)]
    nr = len(a)
    nc = len(a[0]) if nr else 0
    pivots: list[int] = []
    row = 0
    for col in range(nc):
        piv = next((i for i in range(row, nr) if a[i][col] % p != 0), None)
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        inv = pow(a[row][col], -1, p)
        a[row] = [(x * inv) % p for x in a[row]]
        for i in range(nr):
            if i != row and a[i][col] % p != 0:
                f = a[i][col]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[row])]
        pivots.append(col)
        row += 1
    free = [c for c in range(nc) if c not in pivots]
    basis = []
    for f_col in free:
        v = [0] * nc
        v[f_col] = 1
        for r, p_col in enumerate(pivots):
            v[p_col] = (-a[r][f_col]) % p
        basis.append(tuple(v))
    return tuple(basis)


def row_stack(*mats) -> IntMatrix:
    rows: list[IntVec] = []
    for m in mats:
        rows.extend(tuple(int(x) for x in r) for r in m)
    return tuple(rows)


def int_kernel(m) -> IntMatrix:
    """Basis of the integer (left) kernel {x : x m = 0} via HNF transform."""
    res = hnf(m)
    zero_rows = [i for i, row in enumerate(res.h) if all(x == 0 for x in row)]
    return tuple(res.u[i] for i in zero_rows)
