"""Spherical design verification and level-set machinery.

A design set is a half-system X of equal-norm lattice vectors: one
representative per antipodal pair.  The degree-2 and degree-4 design
identities are polynomial identities in the test vector, so they are
certified by assembling the exact moment tensors sum x(x)... and
comparing them against the required multiples of the Gram tensors.
No random test vectors are involved; failures come with an explicit
witness vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct

import numpy as np

from perflat import exact
from perflat.exact import IntVec, Matrix, clear_denominators
from perflat.lattice import Lattice, Shell, min_shell

Rat = Fraction


class InapplicableError(ValueError):
    """The scalar-product precondition of a level-set lemma fails."""


@dataclass(frozen=True)
class DesignSet:
    """Half-system of equal-norm vectors: X together with -X is the shell."""

    ambient: Lattice
    x: tuple[IntVec, ...]
    m: Rat

    @property
    def s(self) -> int:
        return len(self.x)

    def products(self, alpha) -> list[Rat]:
        galpha = exact.vec_mat(tuple(Fraction(a) for a in alpha), self.ambient.gram)
        return [exact.dot(v, galpha) for v in self.x]


def half_system(vectors) -> tuple[IntVec, ...]:
    """Lexicographically positive representative of each +-pair."""
    reps = set()
    for v in vectors:
        v = tuple(int(c) for c in v)
        neg = tuple(-c for c in v)
        reps.add(v if v > neg else neg)
    return tuple(sorted(reps))


def design_set(L: Lattice, shell: Shell) -> DesignSet:
    xs = half_system(shell.vectors)
    for v in xs:
        if L.norm(v) != shell.norm:
            raise ValueError("shell vector with wrong norm")
    return DesignSet(L, xs, Fraction(shell.norm))


def minimal_design_set(L: Lattice) -> DesignSet:
    m, vecs = min_shell(L)
    return DesignSet(L, half_system(vecs), m)


def moments(D: DesignSet, alphas, exponents) -> Rat:
    """Exact mixed moment sum_x prod_j (x, alpha_j)^e_j.

    ``alphas`` is one vector or a sequence of vectors matching the
    exponent tuple.
    """
    if isinstance(exponents, int):
        exponents = (exponents,)
        alphas = (alphas,)
    else:
        exponents = tuple(exponents)
        if alphas and not isinstance(alphas[0], (tuple, list)):
            alphas = (alphas,) * len(exponents)
    prods = [D.products(a) for a in alphas]
    total = Fraction(0)
    for i in range(D.s):
        term = Fraction(1)
        for p, e in zip(prods, exponents):
            term *= p[i] ** e
        total += term
    return total


def _scaled_covectors(D: DesignSet) -> tuple[np.ndarray, int]:
    """Integer covectors s*G*x for all x in X, with the scale s."""
    gi, s = clear_denominators(D.ambient.gram)
    x = np.array(D.x, dtype=object)
    g = np.array(gi, dtype=object)
    return x @ g, s


@dataclass(frozen=True)
class DesignVerdict:
    t: int
    is_design: bool
    witness: IntVec | None
    s: int
    m: Rat
    c2: Rat
    c4: Rat | None


def _design_constants(D: DesignSet, t: int) -> tuple[Rat, Rat | None]:
    n = D.ambient.dim
    c2 = Fraction(D.s) * D.m / n
    c4 = 3 * Fraction(D.s) * D.m ** 2 / (n * (n + 2)) if t >= 4 else None
    return c2, c4


def is_design(D: DesignSet, t: int) -> DesignVerdict:
    """Exact verification of the degree-2 (t=2) or degree-4 (t=4) identity."""
    if t not in (2, 4):
        raise ValueError("t must be 2 or 4")
    n = D.ambient.dim
    c2, c4 = _design_constants(D, t)
    ell, s = _scaled_covectors(D)
    gi, _ = clear_denominators(D.ambient.gram)

    if t == 2:
        bad = _degree2_mismatch(D, ell, gi, s, c2)
    else:
        bad = _degree4_mismatch(D, ell, gi, s, c4)
    if bad is None:
        return DesignVerdict(t, True, None, D.s, D.m, c2, c4)
    witness = _violating_alpha(D, t, bad, c2 if t == 2 else c4)
    return DesignVerdict(t, False, witness, D.s, D.m, c2, c4)


def _degree2_mismatch(D, ell, gi, s, c2):
    n = D.ambient.dim
    t2 = ell.T @ ell  # object ints, scaled by s^2
    want = c2 * s  # times gi, since true identity is T2/s^2 = c2 * gi / s
    for a in range(n):
        for b in range(a, n):
            if Fraction(int(t2[a, b])) != want * gi[a][b]:
                return (a, b)
    return None


def _degree4_mismatch(D, ell, gi, s, c4):
    n = D.ambient.dim
    elli = ell.astype(np.int64) if _fits_int64(ell, 4, D.s) else ell
    t4 = np.einsum("xa,xb,xc,xd->abcd", elli, elli, elli, elli)
    g = np.array(gi, dtype=object)
    # identity: 3 * T4 / s^4 = c4 * (g_ab g_cd + g_ac g_bd + g_ad g_bc) / s^2
    factor = c4 * s * s
    for a in range(n):
        for b in range(a, n):
            for c in range(b, n):
                for d in range(c, n):
                    lhs = 3 * Fraction(int(t4[a, b, c, d]))
                    rhs = factor * (gi[a][b] * gi[c][d] + gi[a][c] * gi[b][d]
                                    + gi[a][d] * gi[b][c])
                    if lhs != rhs:
                        return (a, b, c, d)
    return None


def _fits_int64(ell, power: int, count: int) -> bool:
    mx = max((abs(int(v)) for row in ell for v in np.atleast_1d(row)), default=0)
    return count * (mx ** power) < (1 << 62)


def _violating_alpha(D: DesignSet, t: int, slot, const) -> IntVec:
    """Search the violating slot's coordinates for an explicit witness."""
    n = D.ambient.dim
    support = sorted(set(slot))
    for values in iproduct(range(5), repeat=len(support)):
        if not any(values):
            continue
        alpha = [0] * n
        for idx, val in zip(support, values):
            alpha[idx] = val
        alpha = tuple(alpha)
        lhs = moments(D, alpha, t)
        na = D.ambient.norm(alpha)
        rhs = const * (na if t == 2 else na ** 2)
        if lhs != rhs:
            return alpha
    raise AssertionError("tensor mismatch without a small witness")


def strongly_perfect(L: Lattice) -> DesignVerdict:
    """Whether the minimal vectors form a spherical 4-design."""
    return is_design(minimal_design_set(L), 4)


# -- level sets ----------------------------------------------------------------


@dataclass(frozen=True)
class LevelSets:
    """Partition of X u -X by the absolute scalar product with alpha."""

    alpha: tuple[Rat, ...]
    sets: dict  # |value| -> tuple of vectors from X u -X with that |product|

    def count(self, value) -> int:
        return len(self.sets.get(abs(Fraction(value)), ()))

    def half_count(self, value) -> int:
        c = self.count(value)
        assert c % 2 == 0 or Fraction(value) == 0
        return self.count(value) // 2

    def values(self) -> list[Rat]:
        return sorted(self.sets)


def level_sets(D: DesignSet, alpha) -> LevelSets:
    alpha = tuple(Fraction(a) for a in alpha)
    prods = D.products(alpha)
    sets: dict = {}
    for v, p in zip(D.x, prods):
        key = abs(p)
        bucket = sets.setdefault(key, [])
        bucket.append(v)
        bucket.append(tuple(-c for c in v))
    return LevelSets(alpha, {k: tuple(sorted(vs)) for k, vs in sets.items()})


def n2_vectors(D: DesignSet, alpha, value=2) -> list[IntVec]:
    """Vectors y in X u -X with (y, alpha) exactly +value."""
    alpha = tuple(Fraction(a) for a in alpha)
    out = []
    for v, p in zip(D.x, D.products(alpha)):
        if p == value:
            out.append(v)
        elif p == -value:
            out.append(tuple(-c for c in v))
    return sorted(out)


@dataclass(frozen=True)
class LinkombReport:
    c: Rat
    expected_count: Rat
    count: int
    count_ok: bool
    sum_ok: bool

    @property
    def ok(self) -> bool:
        return self.count_ok and self.sum_ok


def linkomb_check(D: DesignSet, alpha) -> LinkombReport:
    """Check |N_2| = c(a,a)/2 and sum(N_2) = c*a for the level-set constant c.

    Requires all scalar products (x, alpha) in {0, +-1, +-2}; raises
    InapplicableError otherwise.
    """
    alpha = tuple(Fraction(a) for a in alpha)
    prods = D.products(alpha)
    if any(abs(p) not in (0, 1, 2) for p in prods):
        raise InapplicableError("products outside {0, +-1, +-2}")
    n = D.ambient.dim
    na = D.ambient.norm(alpha)
    c = Fraction(D.s) * D.m / (6 * n) * (Fraction(3) * D.m / (n + 2) * na - 1)
    n2 = n2_vectors(D, alpha)
    expected = c * na / 2
    total = tuple(sum(col) for col in zip(*n2)) if n2 else (0,) * n
    sum_ok = all(Fraction(tc) == c * a for tc, a in zip(total, alpha))
    return LinkombReport(c, expected, len(n2), Fraction(len(n2)) == expected, sum_ok)


def n2_bound(D: DesignSet, alpha) -> tuple[Rat, int]:
    """Exact bound r*m/(8 - r*m) on |N_2(alpha)| and its floor."""
    r = D.ambient.norm(alpha)
    rm = r * D.m
    if rm >= 8:
        raise InapplicableError("r*m >= 8: bound formula does not apply")
    bound = rm / (8 - rm)
    return bound, bound.numerator // bound.denominator


@dataclass(frozen=True)
class Projected2DesignVerdict:
    is_design: bool
    constant: Rat | None
    witness: tuple | None
    size: int


def projected_2design(D: DesignSet, alpha) -> Projected2DesignVerdict:
    """Project N_1(alpha) to the complement of alpha and test the 2-design identity.

    Requires (x, alpha) in {0, +-1} for all x; vacuous pass when N_1 is
    empty.
    """
    alpha = tuple(Fraction(a) for a in alpha)
    prods = D.products(alpha)
    if any(abs(p) not in (0, 1) for p in prods):
        raise InapplicableError("products outside {0, +-1}")
    m1 = [v if p == 1 else tuple(-c for c in v)
          for v, p in zip(D.x, prods) if abs(p) == 1]
    if not m1:
        return Projected2DesignVerdict(True, None, None, 0)
    g = D.ambient.gram
    n = D.ambient.dim
    galpha = exact.vec_mat(alpha, g)
    # basis of the orthogonal complement of alpha
    kern = _rational_kernel(galpha)
    b = [[Fraction(0)] * n for _ in range(n)]
    for v in m1:
        gv = exact.vec_mat(tuple(Fraction(c) for c in v), g)
        for i in range(n):
            for j in range(n):
                b[i][j] += gv[i] * gv[j]
    # restrict to the complement and compare with c * restricted Gram
    bk = [[sum(kern[i][a] * b[a][bb] * kern[j][bb] for a in range(n) for bb in range(n))
           for j in range(len(kern))] for i in range(len(kern))]
    gk = [[exact.dot(exact.vec_mat(kern[i], g), kern[j]) for j in range(len(kern))]
          for i in range(len(kern))]
    c = None
    for i in range(len(kern)):
        if gk[i][i] != 0:
            c = bk[i][i] / gk[i][i]
            break
    assert c is not None
    for i in range(len(kern)):
        for j in range(len(kern)):
            if bk[i][j] != c * gk[i][j]:
                for cand in (kern[i], kern[j],
                             tuple(x + y for x, y in zip(kern[i], kern[j]))):
                    lhs = sum(exact.dot(exact.vec_mat(tuple(Fraction(t) for t in v), g),
                                        cand) ** 2 for v in m1)
                    if lhs != c * exact.dot(exact.vec_mat(cand, g), cand):
                        return Projected2DesignVerdict(False, c, cand, len(m1))
                raise AssertionError("restricted mismatch without witness")
    return Projected2DesignVerdict(True, c, None, len(m1))


def _rational_kernel(functional) -> list[tuple[Rat, ...]]:
    """Basis of the kernel of one rational functional (row vector)."""
    n = len(functional)
    piv = next((i for i, x in enumerate(functional) if x != 0), None)
    if piv is None:
        return [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    out = []
    for j in range(n):
        if j == piv:
            continue
        v = [Fraction(0)] * n
        v[j] = Fraction(1)
        v[piv] = -functional[j] / functional[piv]
        out.append(tuple(v))
    return out


# -- integrality constraints ---------------------------------------------------


@dataclass(frozen=True)
class IntegralityRow:
    pair: tuple[int, int]
    products_integral: bool
    mixed_value: Rat | None       # (1/6)(sum (x,g)(x,a)((x,a)^2 - 1))
    mixed_integral: bool | None
    square_value: Rat | None      # (1/12)(sum (x,a)^2((x,a)^2 - 1))
    square_integral: bool | None


def integrality_constraints(D: DesignSet, generators) -> list[IntegralityRow]:
    """Exact divisibility checks on dual-vector pairs.

    For each ordered pair (g, a) of generators the two classification
    constraints are evaluated as exact sums.  Pairs whose scalar
    products with X are not integral are flagged instead of failing:
    the divisibility argument only applies to integral products.
    """
    gens = [tuple(Fraction(c) for c in g) for g in generators]
    rows: list[IntegralityRow] = []
    for i, a in enumerate(gens):
        pa = D.products(a)
        for j, g in enumerate(gens):
            pg = D.products(g)
            integral = all(p.denominator == 1 for p in pa + pg)
            if not integral:
                rows.append(IntegralityRow((j, i), False, None, None, None, None))
                continue
            mixed = sum(pg[k] * pa[k] * (pa[k] ** 2 - 1) for k in range(D.s))
            square = sum(pa[k] ** 2 * (pa[k] ** 2 - 1) for k in range(D.s))
            mv = Fraction(mixed, 6)
            sv = Fraction(square, 12)
            rows.append(IntegralityRow(
                (j, i), True, mv, mv.denominator == 1, sv, sv.denominator == 1))
    return rows
