"""Root-system and glue-theoretic structure.

Equal-norm zero-sum systems and their component decomposition, ADE
recognition of root sublattices, discriminant groups with their
quadratic forms, anti-isometries and subdirect products, even
overlattices from isotropic glue, the norm-4 class system and its
reflections.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct

import numpy as np

from perflat import isometry as iso
from perflat import lattice as lat
from perflat.catalog import root_lattice
from perflat.exact import (
    IntMatrix,
    IntVec,
    Matrix,
    clear_denominators,
    det,
    hnf,
    identity,
    int_mat,
    inverse,
    mat,
    mat_mul,
    snf,
    transpose,
    vec_mat,
)
from perflat.lattice import (
    Lattice,
    lattice_sum_rows,
    index_of_rows,
    sublattice,
    vectors_of_norm,
)

Rat = Fraction


class PreconditionFailedError(ValueError):
    """An equal-norm system violates one of its defining conditions."""


class NotIntegralError(ValueError):
    """Operation requires an integral lattice."""


class GlueMismatchError(ValueError):
    """Glue data does not define an anti-isometry."""


class StructureViolationError(ValueError):
    """The norm-4 class system violates one of its structure claims."""


class NotGeneratedByMinimalError(ValueError):
    """The lattice is not generated by its minimal vectors."""


# -- equal-norm systems --------------------------------------------------------


@dataclass(frozen=True)
class EqualNormSystem:
    vectors: tuple
    norm: Rat
    components: tuple[tuple[int, ...], ...]

    @property
    def t(self) -> int:
        return len(self.components)


def decompose_equal_norm(ambient: Lattice, vectors) -> EqualNormSystem:
    """Component decomposition of an equal-norm, nonpositive-product,
    zero-sum system, with the count identity |E| = dim<E> + t verified.
    """
    vs = [tuple(Fraction(c) for c in v) for v in vectors]
    if not vs:
        raise PreconditionFailedError("empty system")
    norms = [ambient.norm(v) for v in vs]
    if len(set(norms)) != 1:
        raise PreconditionFailedError("norms are not all equal")
    k = len(vs)
    prods = [[ambient.inner(vs[i], vs[j]) for j in range(k)] for i in range(k)]
    for i in range(k):
        for j in range(i):
            if prods[i][j] > 0:
                raise PreconditionFailedError(
                    f"positive product between vectors {j} and {i}")
    total = tuple(sum(col) for col in zip(*vs))
    if any(x != 0 for x in total):
        raise PreconditionFailedError("system does not sum to zero")
    # components: connectivity under nonzero products
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(k):
        for j in range(i):
            if prods[i][j] != 0:
                parent[find(i)] = find(j)
    comps: dict[int, list[int]] = {}
    for i in range(k):
        comps.setdefault(find(i), []).append(i)
    components = tuple(tuple(sorted(c)) for c in
                       sorted(comps.values(), key=lambda c: c[0]))
    for comp in components:
        csum = tuple(sum(vs[i][j] for i in comp) for j in range(len(vs[0])))
        assert all(x == 0 for x in csum), "component does not sum to zero"
    span_dim = lat._rank_of([list(v) for v in vs])
    if k != span_dim + len(components):
        raise PreconditionFailedError(
            f"count identity fails: {k} != {span_dim} + {len(components)}")
    return EqualNormSystem(tuple(vs), norms[0], components)


# -- root sublattices ----------------------------------------------------------


@dataclass(frozen=True)
class RootComponent:
    label: str
    basis: IntMatrix         # rows in the coordinates of the host lattice
    witness: IntMatrix       # isometry witness against the standard Cartan Gram


@dataclass(frozen=True)
class RootDecomposition:
    components: tuple[RootComponent, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.components)


def _ade_label(rank: int, count: int, determinant: Rat) -> str | None:
    if count == rank * (rank + 1) and determinant == rank + 1:
        return f"A_{rank}"
    if rank >= 4 and count == 2 * rank * (rank - 1) and determinant == 4:
        return f"D_{rank}"
    if (rank, count, determinant) == (6, 72, Fraction(3)):
        return "E_6"
    if (rank, count, determinant) == (7, 126, Fraction(2)):
        return "E_7"
    if (rank, count, determinant) == (8, 240, Fraction(1)):
        return "E_8"
    return None


def root_sublattice(L: Lattice) -> RootDecomposition:
    """Decompose the sublattice generated by norm-2 vectors into ADE pieces.

    Recognition uses (rank, root count, determinant), which separates the
    ADE types at every rank; each label is then certified by an explicit
    isometry witness against the standard Cartan Gram.
    """
    roots = vectors_of_norm(L, 2).vectors
    if not roots:
        return RootDecomposition(())
    k = len(roots)
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    gi, s = clear_denominators(L.gram)
    rv = np.array(roots, dtype=np.int64)
    g = np.array([[int(x) for x in row] for row in gi], dtype=np.int64)
    prods = rv @ g @ rv.T
    for i in range(k):
        for j in range(i):
            if prods[i, j] != 0:
                parent[find(i)] = find(j)
    comps: dict[int, list[int]] = {}
    for i in range(k):
        comps.setdefault(find(i), []).append(i)
    out = []
    for idxs in sorted(comps.values(), key=lambda c: sorted(c)[0]):
        sub_rows = [roots[i] for i in sorted(idxs)]
        h = hnf(sub_rows)
        basis = tuple(r for r in h.h if any(r))
        comp = sublattice(L, basis)
        rank = len(basis)
        label = _ade_label(rank, len(idxs), lat.determinant(comp))
        if label is None:
            raise StructureViolationError(
                f"component (rank {rank}, {len(idxs)} roots) is not ADE")
        witness = iso.is_isometric(root_lattice(label), comp)
        if witness is None:
            raise StructureViolationError(f"component failed {label} certification")
        out.append(RootComponent(label, int_mat(basis), witness))
    return RootDecomposition(tuple(out))


# -- discriminant groups -------------------------------------------------------


@dataclass(frozen=True)
class DiscGroup:
    """L*/L in Smith normal form with its torsion quadratic form.

    Generators are rational rows in L-coordinates; q is taken mod 2 for
    even lattices and mod 1 for merely integral ones.
    """

    lattice: Lattice
    orders: tuple[int, ...]
    gens: tuple[tuple[Rat, ...], ...]
    modulus: int

    @property
    def order(self) -> int:
        out = 1
        for d in self.orders:
            out *= d
        return out

    def element(self, coeffs) -> tuple[Rat, ...]:
        n = self.lattice.dim
        v = [Fraction(0)] * n
        for c, g in zip(coeffs, self.gens):
            for i in range(n):
                v[i] += c * g[i]
        return tuple(v)

    def elements(self):
        for coeffs in iproduct(*(range(d) for d in self.orders)):
            yield coeffs

    def q(self, coeffs) -> Rat:
        v = self.element(coeffs)
        return self.lattice.norm(v) % self.modulus

    def b(self, c1, c2) -> Rat:
        return self.lattice.inner(self.element(c1), self.element(c2)) % 1

    def order_of(self, coeffs) -> int:
        from math import gcd, lcm
        o = 1
        for c, d in zip(coeffs, self.orders):
            if c % d:
                o = lcm(o, d // gcd(c, d))
        return o


def disc_group(L: Lattice) -> DiscGroup:
    """Discriminant group presentation from the SNF of the Gram matrix."""
    if any(x.denominator != 1 for row in L.gram for x in row):
        raise NotIntegralError("lattice is not integral")
    gint = [[int(x) for x in row] for row in L.gram]
    res = snf(gint)
    ginv = inverse(L.gram)
    vinv = inverse(mat(res.t))
    orders = []
    gens = []
    for i, d in enumerate(res.d):
        if d == 1:
            continue
        orders.append(int(d))
        gens.append(vec_mat(vinv[i], ginv))
    modulus = 2 if all(gint[i][i] % 2 == 0 for i in range(L.dim)) else 1
    dg = DiscGroup(L, tuple(orders), tuple(gens), modulus)
    assert dg.order == abs(int(det(mat(gint)))), "group order mismatch"
    return dg


@dataclass(frozen=True)
class GlueMap:
    source: DiscGroup
    target: DiscGroup
    images: tuple[tuple[int, ...], ...]   # image coefficients per source generator
    anti: bool

    def apply(self, coeffs) -> tuple[int, ...]:
        k = len(self.target.orders)
        out = [0] * k
        for c, img in zip(coeffs, self.images):
            for i in range(k):
                out[i] = (out[i] + c * img[i]) % self.target.orders[i]
        return tuple(out)


def anti_isometry_search(g1: DiscGroup, g2: DiscGroup) -> GlueMap | None:
    """Exhaustive search for a q-negating isomorphism between small glue groups.

    The verification runs over every element of the source group, which
    is stronger than a generator-closure certificate and feasible for
    the group orders used here (a few dozen at most).
    """
    if g1.order != g2.order:
        return None
    if g1.order > 4096:
        raise ValueError("glue group too large for exhaustive search")
    mod = min(g1.modulus, g2.modulus)
    t_elems = list(g2.elements())
    t_orders = {e: g2.order_of(e) for e in t_elems}
    src_gens = [tuple(1 if j == i else 0 for j in range(len(g1.orders)))
                for i in range(len(g1.orders))]
    cand_per_gen = []
    for i, d in enumerate(g1.orders):
        cands = [e for e in t_elems
                 if t_orders[e] == d
                 and (g2.q(e) + g1.q(src_gens[i])) % mod == 0]
        cand_per_gen.append(cands)
    for images in iproduct(*cand_per_gen):
        gm = GlueMap(g1, g2, tuple(images), True)
        seen = set()
        ok = True
        for coeffs in g1.elements():
            img = gm.apply(coeffs)
            if img in seen:
                ok = False
                break
            seen.add(img)
            if (g2.q(img) + g1.q(coeffs)) % mod != 0:
                ok = False
                break
        if ok:
            return gm
    return None


def subdirect_product(L1: Lattice, L2: Lattice, pairs,
                      expected_glue_order: int | None = None) -> Lattice:
    """Glued sublattice of L1* . L2* matching dual classes through the pairs.

    ``pairs`` lists (a, b) with a in L1* and b in L2* (rational rows in
    the respective coordinates); the lattice generated by L1 + L2 and
    the juxtaposed rows (a | b) is returned.  The glue map a-bar to
    b-bar must negate the quadratic form on the generated quotient
    subgroup, otherwise GlueMismatchError is raised; the determinant
    identity det = det(L1) det(L2) / glue^2 is asserted.
    """
    n1, n2 = L1.dim, L2.dim
    amb_rows = []
    for i in range(n1):
        amb_rows.append(tuple(Fraction(int(i == j)) for j in range(n1 + n2)))
    for i in range(n2):
        amb_rows.append(tuple(Fraction(int(i + n1 == j)) for j in range(n1 + n2)))
    glue_rows = []
    for a, b in pairs:
        a = tuple(Fraction(x) for x in a)
        b = tuple(Fraction(x) for x in b)
        glue_rows.append(a + b)
    rows = lattice_sum_rows(amb_rows, glue_rows) if glue_rows else mat(amb_rows)
    big = _block_lattice(L1, L2)
    M = sublattice(big, rows)
    # glue subgroup order: index of L1+L2 inside M
    glue_order = index_of_rows(amb_rows, rows)
    if expected_glue_order is not None and glue_order != expected_glue_order:
        raise GlueMismatchError(
            f"glue group has order {glue_order}, expected {expected_glue_order}")
    # the executable anti-isometry contract: the glued lattice must be
    # integral with even norms (the q-values of matched classes cancel)
    for i in range(M.dim):
        if M.gram[i][i].denominator != 1 or M.gram[i][i] % 2 != 0:
            raise GlueMismatchError("glued lattice is not even")
        for j in range(i):
            if M.gram[i][j].denominator != 1:
                raise GlueMismatchError("glued lattice is not integral")
    expected_det = lat.determinant(L1) * lat.determinant(L2) / glue_order ** 2
    got = lat.determinant(M)
    assert got == expected_det, (got, expected_det)
    return M


def _block_lattice(L1: Lattice, L2: Lattice) -> Lattice:
    from perflat.catalog import orthogonal_sum
    return orthogonal_sum(L1, L2)


# -- even overlattices ---------------------------------------------------------


def _subgroups_of_order(dg: DiscGroup, k: int) -> list[tuple[tuple[int, ...], ...]]:
    """Generator tuples for all subgroups of order k (k = 1, prime, or prime^2)."""
    if k == 1:
        return [()]
    elems = [e for e in dg.elements() if any(e)]
    orders = {e: dg.order_of(e) for e in elems}

    def span(gens) -> frozenset:
        seen = {tuple(0 for _ in dg.orders)}
        frontier = [tuple(0 for _ in dg.orders)]
        while frontier:
            cur = frontier.pop()
            for g in gens:
                nxt = tuple((c + d) % o for c, d, o in zip(cur, g, dg.orders))
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return frozenset(seen)

    found: dict[frozenset, tuple] = {}
    primes = [p for p in range(2, k + 1) if k % p == 0 and exact_is_prime(p)]
    if len(primes) != 1 or k not in (primes[0], primes[0] ** 2):
        raise ValueError("subgroup enumeration supports prime and prime^2 orders")
    p = primes[0]
    for e in elems:
        if orders[e] == k:
            s = span([e])
            if len(s) == k:
                found.setdefault(s, (e,))
    if k == p * p:
        p_elems = [e for e in elems if orders[e] == p]
        for i, e1 in enumerate(p_elems):
            for e2 in p_elems[i + 1:]:
                s = span([e1, e2])
                if len(s) == k:
                    found.setdefault(s, (e1, e2))
    return [found[key] for key in sorted(found, key=sorted)]


def exact_is_prime(p: int) -> bool:
    from perflat.exact import is_prime
    return is_prime(p)


def even_overlattices(L: Lattice, index: int) -> list[Lattice]:
    """Even overlattices of the given index, one per isometry class.

    Candidates come from isotropic subgroups of the discriminant group;
    duplicates are removed by fingerprint grouping followed by exact
    isometry.
    """
    if index == 1:
        return [L]
    dg = disc_group(L)
    if dg.modulus != 2:
        raise NotIntegralError("even overlattices need an even lattice")
    if lat.determinant(L) % (index * index) != 0:
        return []
    out = []
    n = L.dim
    for gens in _subgroups_of_order(dg, index):
        iso_ok = True
        for coeffs in _span_coeffs(dg, gens):
            if any(coeffs) and dg.q(coeffs) % 2 != 0:
                iso_ok = False
                break
        if not iso_ok:
            continue
        rows = lattice_sum_rows(identity(n), [dg.element(g) for g in gens])
        over = sublattice(L, rows)
        assert index_of_rows(identity(n), rows) == index
        out.append(over)
    return [rep for rep, _ in iso.dedup_classes(out)]


def _span_coeffs(dg: DiscGroup, gens):
    seen = {tuple(0 for _ in dg.orders)}
    frontier = [tuple(0 for _ in dg.orders)]
    while frontier:
        cur = frontier.pop()
        yield cur
        for g in gens:
            nxt = tuple((c + d) % o for c, d, o in zip(cur, g, dg.orders))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)


# -- the norm-4 class system ----------------------------------------------------


@dataclass(frozen=True)
class ClassSystem:
    """Norm-4 vectors of the dual, modulo three times the primal lattice.

    Vectors are stored in the coordinates of the primal lattice (the
    one with minimum 4/3); classes have size 3, sum to zero and have
    pairwise inner products -2.
    """

    primal: Lattice                       # the minimum-4/3 lattice
    classes: tuple[tuple[tuple[Rat, ...], ...], ...]

    def __len__(self) -> int:
        return len(self.classes)

    def pairing(self, i: int, j: int) -> int:
        k1, k2 = self.classes[i], self.classes[j]
        prods = [[self.primal.inner(u, v) for v in k2] for u in k1]
        if all(x == 0 for row in prods for x in row):
            return 0
        eps = 1 if any(x == 2 for row in prods for x in row) else -1
        return eps


def class_system(gamma: Lattice, sample_n2: int = 20) -> ClassSystem:
    """Partition the norm-4 shell of gamma into classes mod 3*dual.

    gamma must be integral with norm-4 vectors; the primal lattice is
    its dual (minimum 4/3 in the intended scaling).  Structure claims
    are verified exactly: class size 3, zero sums, in-class products
    -2, the level-set identification of the in-class differences (on a
    sample), the pairing pattern for every class pair and closure of
    non-orthogonal pairs.
    """
    if any(x.denominator != 1 for row in gamma.gram for x in row):
        raise NotIntegralError("gamma must be integral")
    lam = lat.dual(gamma)
    shell = vectors_of_norm(gamma, 4).vectors
    if not shell:
        raise StructureViolationError("no norm-4 vectors")
    gint = [[int(x) for x in row] for row in gamma.gram]
    # gamma-coords -> lambda-coords: y = v * G (integral)
    lam_vecs = [tuple(sum(v[i] * gint[i][j] for i in range(gamma.dim))
                      for j in range(gamma.dim)) for v in shell]
    buckets: dict[tuple, list[int]] = {}
    for idx, y in enumerate(lam_vecs):
        buckets.setdefault(tuple(c % 3 for c in y), []).append(idx)
    classes = []
    for key in sorted(buckets):
        idxs = buckets[key]
        if len(idxs) != 3:
            raise StructureViolationError(
                f"class of size {len(idxs)} (expected 3)")
        members = tuple(sorted(tuple(Fraction(c) for c in lam_vecs[i])
                               for i in idxs))
        total = tuple(sum(col) for col in zip(*members))
        if any(x != 0 for x in total):
            raise StructureViolationError("class does not sum to zero")
        for a in range(3):
            for b in range(a):
                if lam.inner(members[a], members[b]) != -2:
                    raise StructureViolationError("in-class product is not -2")
        classes.append(members)
    cs = ClassSystem(lam, tuple(classes))
    _verify_pairings(cs)
    _verify_n2_members(cs, sample_n2)
    return cs


def _verify_pairings(cs: ClassSystem) -> None:
    lam = cs.primal
    nc = len(cs.classes)
    index_of = {cls: i for i, cls in enumerate(cs.classes)}
    gi, s = clear_denominators(lam.gram)
    y = np.array([[int(c) for c in v] for cls in cs.classes for v in cls],
                 dtype=np.int64)
    g = np.array([[int(x) for x in row] for row in gi], dtype=np.int64)
    p = y @ g @ y.T
    if np.any(p % s):
        raise StructureViolationError("non-integral product between classes")
    p //= s
    blocks = p.reshape(nc, 3, nc, 3)
    for i in range(nc):
        k1 = cs.classes[i]
        for j in range(i + 1, nc):
            blk = blocks[i, :, j, :]
            if not blk.any():
                continue
            amax = np.abs(blk).max()
            if amax == 4:
                if cs.classes[j] != tuple(sorted(
                        tuple(-c for c in v) for v in k1)):
                    raise StructureViolationError("product 4 outside a -K pair")
                continue
            eps = 1 if (blk == 2).any() else -1
            rows_sorted = np.sort(blk, axis=1)
            want = sorted([2 * eps, -eps, -eps])
            if not (rows_sorted == np.array(want)).all() \
               or not (np.sort(blk, axis=0) == np.array(want)[:, None]).all():
                raise StructureViolationError(f"pairing pattern {blk.tolist()}")
            if eps == -1:
                k2 = cs.classes[j]
                summed = []
                for a in range(3):
                    b = int(np.nonzero(blk[a] == -2)[0][0])
                    summed.append(tuple(x + z for x, z in zip(k1[a], k2[b])))
                if tuple(sorted(summed)) not in index_of:
                    raise StructureViolationError("closure class missing")


def _verify_n2_members(cs: ClassSystem, sample: int) -> None:
    from perflat.design import minimal_design_set, n2_vectors
    d = minimal_design_set(cs.primal)
    for members in cs.classes[:sample]:
        u, v, w = members
        expect = sorted([tuple((a - b) / 3 for a, b in zip(u, v)),
                         tuple((a - b) / 3 for a, b in zip(u, w))])
        got = n2_vectors(d, u)
        if [tuple(Fraction(c) for c in g) for g in got] != expect:
            raise StructureViolationError("N_2 does not match the class differences")


@dataclass(frozen=True)
class ReflectionReport:
    matrix: Matrix
    preserves_lattice: bool
    is_involution: bool


def reflection_sK(cs: ClassSystem, i: int) -> ReflectionReport:
    """The isometry that negates the plane of class i and fixes its complement.

    Requires the primal lattice to be generated by its minimal vectors;
    the report confirms that the transform maps the lattice onto itself.
    """
    lam = cs.primal
    n = lam.dim
    mshell = lat.min_shell(lam)[1]
    h = hnf([list(v) for v in mshell])
    gen_rows = [r for r in h.h if any(r)]
    if len(gen_rows) != n or abs(det(mat(gen_rows))) != 1:
        raise NotGeneratedByMinimalError("primal not generated by minimal vectors")
    k = cs.classes[i]
    a = mat([k[0], k[1]])
    g = lam.gram
    aga = mat_mul(mat_mul(a, g), transpose(a))
    proj = mat_mul(mat_mul(mat_mul(g, transpose(a)), inverse(aga)), a)
    s = mat([[Fraction(int(r == c)) - 2 * proj[r][c] for c in range(n)]
             for r in range(n)])
    assert mat_mul(mat_mul(s, g), transpose(s)) == g
    s2 = mat_mul(s, s)
    involution = s2 == identity(n)
    integral = all(x.denominator == 1 for row in s for x in row)
    return ReflectionReport(s, integral, involution)
