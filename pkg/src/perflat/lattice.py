"""The Lattice abstraction and Gram-level constructions.

A lattice is its Gram matrix: a symmetric positive definite matrix of
exact rationals, optionally labelled and carrying the integer basis
change that produced it from a parent lattice.  All shells, minima and
sublattice operations are certified by exact enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from perflat import exact
from perflat.enumeration import ExactEnumerator
from perflat.exact import (
    IntMatrix,
    IntVec,
    Matrix,
    clear_denominators,
    det,
    hnf,
    int_kernel,
    int_mat,
    inverse,
    is_symmetric,
    mat,
    mat_mul,
    row_stack,
    transpose,
)

Rat = Fraction


class NonPositiveScaleError(ValueError):
    """Rescaling factor must be positive."""


class NotClosedError(ValueError):
    """The even-norm subset is not closed under addition."""


class HypothesisFailedError(ValueError):
    """The mod-3 product hypothesis fails on a basis pair."""


class NotSublatticeError(ValueError):
    """index_of called on a pair that is not sub/superlattice."""


@dataclass(frozen=True)
class Lineage:
    parent: str | None
    rows: IntMatrix


@dataclass(frozen=True)
class Lattice:
    gram: Matrix
    label: str | None = None
    lineage: Lineage | None = None

    def __post_init__(self):
        object.__setattr__(self, "gram", mat(self.gram))
        if not is_symmetric(self.gram):
            raise ValueError("Gram matrix must be symmetric")

    @property
    def dim(self) -> int:
        return len(self.gram)

    def norm(self, v) -> Rat:
        return exact.dot(exact.vec_mat(tuple(Fraction(x) for x in v), self.gram),
                         tuple(Fraction(x) for x in v))

    def inner(self, v, w) -> Rat:
        return exact.dot(exact.vec_mat(tuple(Fraction(x) for x in v), self.gram),
                         tuple(Fraction(x) for x in w))

    def relabel(self, label: str | None) -> "Lattice":
        return Lattice(self.gram, label, self.lineage)


@dataclass(frozen=True)
class Shell:
    """All lattice vectors of one exact norm, closed under negation."""

    norm: Rat
    vectors: tuple[IntVec, ...]

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class SublatticeTransform:
    """Rows express a sublattice basis in parent coordinates."""

    rows: IntMatrix
    index: int


_ENUM_CACHE: dict[Matrix, ExactEnumerator] = {}
_MIN_CACHE: dict[Matrix, tuple[Rat, tuple[IntVec, ...]]] = {}


def enumerator(L: Lattice) -> ExactEnumerator:
    e = _ENUM_CACHE.get(L.gram)
    if e is None:
        e = ExactEnumerator(L.gram)
        _ENUM_CACHE[L.gram] = e
    return e


def is_positive_definite(L: Lattice) -> bool:
    try:
        enumerator(L)
    except Exception:
        return False
    return True


def dual(L: Lattice) -> Lattice:
    """Dual lattice: inverse Gram in the dual basis."""
    label = None
    if L.label is not None:
        label = L.label[:-1] if L.label.endswith("*") else L.label + "*"
    return Lattice(inverse(L.gram), label)


def rescale(L: Lattice, c) -> Lattice:
    c = Fraction(c)
    if c <= 0:
        raise NonPositiveScaleError(f"scale must be positive, got {c}")
    label = None if L.label is None else f"{L.label}x{c}"
    return Lattice(exact.scale(L.gram, c), label)


def determinant(L: Lattice) -> Rat:
    return det(L.gram)


def min_shell(L: Lattice) -> tuple[Rat, tuple[IntVec, ...]]:
    cached = _MIN_CACHE.get(L.gram)
    if cached is None:
        m, vecs = enumerator(L).min_shell()
        cached = (m, tuple(vecs))
        _MIN_CACHE[L.gram] = cached
    return cached


def minimum(L: Lattice) -> Rat:
    return min_shell(L)[0]


def shortest_vectors(L: Lattice) -> Shell:
    m, vecs = min_shell(L)
    return Shell(m, vecs)


def kissing(L: Lattice) -> int:
    return len(min_shell(L)[1])


def vectors_of_norm(L: Lattice, a) -> Shell:
    a = Fraction(a)
    if a <= 0:
        raise ValueError("shell norm must be positive")
    return Shell(a, tuple(enumerator(L).vectors_of_norm(a)))


def ball(L: Lattice, bound, strict: bool = False) -> list[tuple[IntVec, Rat]]:
    return enumerator(L).ball(bound, strict=strict)


def hermite_invariant(L: Lattice) -> Rat:
    """The n-th power of the Hermite function: min(L)^n / det(L), exact."""
    return minimum(L) ** L.dim / determinant(L)


# -- Hermite constant upper bounds ------------------------------------------
#
# Values are exact rationals dominating gamma_n^n.  Dimensions 1..8 are
# the exact classical constants; 11 and 12 are published upper bounds
# (2.39 and 2.522 on gamma_n) that the dimension-12 classification run
# relies on.  Other dimensions are intentionally absent.

HERMITE_POWER_BOUNDS: dict[int, tuple[Rat, str]] = {
    1: (Fraction(1), "exact"),
    2: (Fraction(4, 3), "exact"),
    3: (Fraction(2), "exact"),
    4: (Fraction(4), "exact"),
    5: (Fraction(8), "exact"),
    6: (Fraction(64, 3), "exact"),
    7: (Fraction(64), "exact"),
    8: (Fraction(256), "exact"),
    11: (Fraction(239, 100) ** 11, "published bound 2.39"),
    12: (Fraction(1261, 500) ** 12, "published bound 2.522"),
}


def hermite_power_bound(n: int) -> Rat:
    if n not in HERMITE_POWER_BOUNDS:
        raise KeyError(f"no stored Hermite bound for dimension {n}")
    return HERMITE_POWER_BOUNDS[n][0]


# -- sublattices defined by norm congruences --------------------------------


def _check_integral_norms(L: Lattice) -> None:
    for i in range(L.dim):
        if L.gram[i][i].denominator != 1:
            raise ValueError("norms are not integral on the basis")
        for j in range(i):
            if (2 * L.gram[i][j]).denominator != 1:
                raise ValueError("norms are not integral (odd double products)")


def even_sublattice(L: Lattice) -> SublatticeTransform:
    """Largest sublattice of even-norm vectors of an integral-norm lattice.

    Raises NotClosedError when the even-norm subset is not closed under
    addition (possible when scalar products are half-integral); when it
    is closed the index is 1, 2 or 4.
    """
    _check_integral_norms(L)
    n = L.dim
    g2 = np.array([[int(2 * x) for x in row] for row in L.gram], dtype=np.int64)
    reps = np.array(np.meshgrid(*[[0, 1]] * n, indexing="ij")).reshape(n, -1).T
    norms2 = np.einsum("ij,jk,ik->i", reps, g2, reps)
    parity = (norms2 // 2) % 2
    members = reps[parity == 0]
    masks = members @ (1 << np.arange(n, dtype=np.int64))
    rank, basis = _f2_rank_basis(members)
    if len(members) != (1 << rank):
        # |T| != 2^rank means T is not a subgroup: exhibit a witness pair
        member_set = set(int(m) for m in masks)
        for a in member_set:
            for b in member_set:
                if (a ^ b) not in member_set:
                    va = tuple((a >> k) & 1 for k in range(n))
                    vb = tuple((b >> k) & 1 for k in range(n))
                    raise NotClosedError(f"even-norm subset not closed: {va} + {vb}")
        raise NotClosedError("even-norm subset not closed")
    index = 1 << (n - rank)
    assert index in (1, 2, 4), index
    rows = row_stack(basis, [[2 * int(i == j) for j in range(n)] for i in range(n)])
    h = hnf(rows)
    return SublatticeTransform(h.h[:n], index)


def _f2_rank_basis(members: np.ndarray) -> tuple[int, list[IntVec]]:
    basis_masks: list[int] = []
    basis_rows: list[IntVec] = []
    n = members.shape[1] if len(members) else 0
    for row in members:
        m = 0
        for k in range(n):
            m |= int(row[k]) << k
        cur = m
        for bm in basis_masks:
            low = bm & -bm
            if cur & low:
                cur ^= bm
        if cur:
            basis_masks.append(cur)
            basis_rows.append(tuple(int(x) for x in row))
    return len(basis_masks), basis_rows


def norm_3divisible_sublattice(L: Lattice) -> SublatticeTransform:
    """Sublattice of vectors with norm divisible by 3; index 1 or 3.

    Requires the product hypothesis (a,b)^2 = (a,a)(b,b) mod 3 on all
    basis pairs; raises HypothesisFailedError otherwise.
    """
    n = L.dim
    gi, s = clear_denominators(L.gram)
    if s % 3 == 0:
        raise ValueError("Gram entries are not 3-integral")
    sinv = pow(s, -1, 3)
    g3 = [[(x * sinv) % 3 for x in row] for row in gi]
    for i in range(n):
        for j in range(n):
            if (g3[i][j] ** 2 - g3[i][i] * g3[j][j]) % 3 != 0:
                raise HypothesisFailedError(
                    f"(a,b)^2 != (a,a)(b,b) mod 3 for basis pair ({i}, {j})")
    gmat = np.array([[int(x) for x in row] for row in g3], dtype=np.int64)
    reps = np.array(np.meshgrid(*[[0, 1, 2]] * n, indexing="ij")).reshape(n, -1).T
    norms = np.einsum("ij,jk,ik->i", reps, gmat, reps) % 3
    members = reps[norms == 0]
    rank, basis = _f3_rank_basis(members)
    if len(members) != 3 ** rank:
        raise HypothesisFailedError("norm-3 subset is not a subgroup")
    index = 3 ** (n - rank)
    assert index in (1, 3), index
    rows = row_stack(basis, [[3 * int(i == j) for j in range(n)] for i in range(n)])
    h = hnf(rows)
    return SublatticeTransform(h.h[:n], index)


def _f3_rank_basis(members: np.ndarray) -> tuple[int, list[IntVec]]:
    basis: list[list[int]] = []
    pivots: list[int] = []
    rows: list[IntVec] = []
    for row in members:
        cur = [int(x) % 3 for x in row]
        for b, p in zip(basis, pivots):
            if cur[p]:
                f = (cur[p] * pow(b[p], -1, 3)) % 3
                cur = [(x - f * y) % 3 for x, y in zip(cur, b)]
        piv = next((k for k, x in enumerate(cur) if x), None)
        if piv is not None:
            basis.append(cur)
            pivots.append(piv)
            rows.append(tuple(int(x) for x in row))
    return len(basis), rows


# -- sums, intersections, indices -------------------------------------------


def _scaled_int_rows(rows) -> tuple[IntMatrix, int]:
    m = mat(rows)
    return clear_denominators(m)


def lattice_sum_rows(*row_sets) -> Matrix:
    """Canonical (HNF) generators of the lattice generated by all rows."""
    from math import lcm
    scaled = [_scaled_int_rows(rs) for rs in row_sets]
    s = 1
    for _, d in scaled:
        s = lcm(s, d)
    stacked = []
    for rs, d in scaled:
        f = s // d
        stacked.extend(tuple(x * f for x in row) for row in rs)
    h = hnf(stacked)
    rows = [r for r in h.h if any(r)]
    return mat([[Fraction(x, s) for x in row] for row in rows])


def lattice_intersect_rows(rows_a, rows_b) -> Matrix:
    """Generators of the intersection of two row lattices (same ambient)."""
    (ia, da) = _scaled_int_rows(rows_a)
    (ib, db) = _scaled_int_rows(rows_b)
    from math import lcm
    s = lcm(da, db)
    a = tuple(tuple(x * (s // da) for x in row) for row in ia)
    b = tuple(tuple(x * (s // db) for x in row) for row in ib)
    # x*a = y*b  <=>  (x, y) in the integer kernel of [[a], [-b]]
    stacked = row_stack(a, [[-x for x in row] for row in b])
    kern = int_kernel(stacked)
    na = len(a)
    combos = [tuple(k[:na]) for k in kern]
    rows = [tuple(sum(c[i] * a[i][j] for i in range(na)) for j in range(len(a[0])))
            for c in combos]
    h = hnf(rows) if rows else None
    if h is None:
        return mat([])
    out = [r for r in h.h if any(r)]
    return mat([[Fraction(x, s) for x in row] for row in out])


def index_of_rows(rows_sub, rows_super) -> int:
    """Index of one full-rank row lattice in another (same ambient)."""
    sub = mat(rows_sub)
    sup = mat(rows_super)
    if len(sub) != len(sup):
        raise NotSublatticeError("rank mismatch")
    # solve sub = C * sup exactly via the (invertible) row Gram of sup
    try:
        ginv = inverse(mat_mul(sup, transpose(sup)))
    except exact.SingularMatrixError:
        raise NotSublatticeError("superlattice rows are not independent")
    c = mat_mul(mat_mul(sub, transpose(sup)), ginv)
    for i, row in enumerate(c):
        if exact.vec_mat(row, sup) != sub[i]:
            raise NotSublatticeError("sub rows do not lie in the superlattice span")
        if any(x.denominator != 1 for x in row):
            raise NotSublatticeError("sub is not an integral combination of super")
    d = det(c)
    if d == 0:
        raise NotSublatticeError("sub rows are not full rank")
    assert d.denominator == 1
    return abs(int(d))


def sublattice(parent: Lattice, rows, label: str | None = None) -> Lattice:
    """Lattice spanned by rows (in parent coordinates), with lineage."""
    r = mat(rows)
    gram = mat_mul(mat_mul(r, parent.gram), transpose(r))
    lineage = None
    if all(x.denominator == 1 for row in r for x in row):
        lineage = Lineage(parent.label, int_mat(r))
    return Lattice(gram, label, lineage)


def transform_lattice(parent: Lattice, t: SublatticeTransform,
                      label: str | None = None) -> Lattice:
    return sublattice(parent, t.rows, label)


# -- successive minima --------------------------------------------------------


def successive_minima(L: Lattice, r: int) -> tuple[Rat, ...]:
    """First r successive minima, certified by exact shell enumeration."""
    if not 1 <= r <= L.dim:
        raise ValueError("need 1 <= r <= dim")
    bound = minimum(L)
    while True:
        pts = ball(L, bound)
        pts.sort(key=lambda p: (p[1], p[0]))
        rows: list[IntVec] = []
        minima: list[Rat] = []
        for v, nrm in pts:
            if _rank_of(rows + [v]) > len(rows):
                rows.append(v)
                minima.append(nrm)
                if len(minima) == r:
                    return tuple(minima)
        bound *= 2


def _rank_of(rows) -> int:
    a = [[Fraction(x) for x in row] for row in rows]
    nr = len(a)
    if nr == 0:
        return 0
    nc = len(a[0])
    rank = 0
    for col in range(nc):
        piv = next((i for i in range(rank, nr) if a[i][col] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = 1 / a[rank][col]
        a[rank] = [x * inv for x in a[rank]]
        for i in range(nr):
            if i != rank and a[i][col] != 0:
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class MinkowskiVerdict:
    holds: bool
    r: int
    lhs_power: Rat      # (m_1 ... m_r)^n
    rhs_power: Rat      # (gamma_n^n)^r * det^r
    minima: tuple[Rat, ...]


def minkowski_check(L: Lattice, r: int) -> MinkowskiVerdict:
    """Check m_1*...*m_r <= gamma_n^r det^{r/n} on n-th powers, exactly."""
    minima = successive_minima(L, r)
    n = L.dim
    lhs = prod(minima) ** n
    rhs = hermite_power_bound(n) ** r * determinant(L) ** r
    return MinkowskiVerdict(lhs <= rhs, r, lhs, rhs, minima)


def box_enumeration_oracle(L: Lattice, bound) -> list[tuple[IntVec, Rat]]:
    """Independent brute-force ball enumeration over a coordinate box.

    Coordinate ranges come from the dual Gram diagonal: for any x with
    x G x^T <= C one has x_i^2 <= C * (G^{-1})_{ii}.  This is the test
    oracle for the Fincke-Pohst engine; it is deliberately naive.
    """
    bound = Fraction(bound)
    ginv = inverse(L.gram)
    n = L.dim
    from itertools import product as iproduct
    ranges = []
    for i in range(n):
        lim = floor_sqrt_frac(bound * ginv[i][i])
        ranges.append(range(-lim, lim + 1))
    out = []
    for x in iproduct(*ranges):
        if not any(x):
            continue
        nrm = L.norm(x)
        if 0 < nrm <= bound:
            out.append((tuple(x), nrm))
    out.sort()
    return out


def floor_sqrt_frac(x: Rat) -> int:
    from math import isqrt
    x = Fraction(x)
    if x < 0:
        raise ValueError("negative")
    return isqrt(x.numerator * x.denominator) // x.denominator
