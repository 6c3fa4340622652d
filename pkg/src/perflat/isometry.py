"""Exact lattice isometry testing and isometry-class deduplication.

The test is a backtrack over short-vector images: a full-rank probe
tuple is extracted from the shells of the first lattice and mapped onto
product-compatible vectors of the second; a candidate map is accepted
only after the exact Gram identity and unimodularity are verified.
"None" is returned only after exhausting the search tree, so it is a
certificate of non-isometry.  Fingerprints of cheap exact invariants
act as a prefilter and as the grouping key for deduplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from perflat import lattice as lat
from perflat.exact import (
    IntMatrix,
    clear_denominators,
    det,
    int_mat,
    inverse,
    mat,
    mat_mul,
    transpose,
)
from perflat.lattice import Lattice
from perflat.reduction import lll_reduce


@dataclass(frozen=True)
class Fingerprint:
    dim: int
    det: Fraction
    minimum: Fraction
    shell_sizes: tuple[tuple[Fraction, int], ...]
    min_products: tuple[tuple[Fraction, int], ...]


def fingerprint(L: Lattice, cutoff=None) -> Fingerprint:
    """Isometry-invariant fingerprint (a necessary condition only)."""
    m = lat.minimum(L)
    if cutoff is None:
        cutoff = 2 * m
    pts = lat.ball(L, cutoff)
    by_norm: dict[Fraction, int] = {}
    for _, nrm in pts:
        by_norm[nrm] = by_norm.get(nrm, 0) + 1
    shell = [v for v, nrm in pts if nrm == m]
    gi, s = clear_denominators(L.gram)
    sv = np.array(shell, dtype=np.int64)
    g = np.array([[int(x) for x in row] for row in gi], dtype=np.int64)
    prods = sv @ g @ sv.T
    vals, counts = np.unique(prods, return_counts=True)
    prod_ms = tuple((Fraction(int(v), s), int(c)) for v, c in zip(vals, counts))
    return Fingerprint(L.dim, lat.determinant(L), m,
                       tuple(sorted(by_norm.items())), prod_ms)


def _probe_rows(L: Lattice) -> list[tuple]:
    """Full-rank tuple of short vectors of L, taken shell by shell."""
    from perflat.lattice import _rank_of
    rows: list[tuple] = []
    bound = lat.minimum(L)
    while True:
        pts = lat.ball(L, bound)
        pts.sort(key=lambda p: (p[1], p[0]))
        for v, _ in pts:
            if len(rows) == L.dim:
                break
            if _rank_of(rows + [list(v)]) > len(rows):
                rows.append(v)
        if len(rows) == L.dim:
            return rows
        bound *= 2


def is_isometric(L1: Lattice, L2: Lattice) -> IntMatrix | None:
    """Unimodular witness u with u * G1 * u^T = G2, or None (exhaustive).

    The witness maps the coordinates of L2 isometrically onto L1, i.e.
    row i of u is the image of the i-th basis vector of L2 written in
    the basis of L1.
    """
    if L1.dim != L2.dim:
        return None
    if lat.determinant(L1) != lat.determinant(L2):
        return None
    if fingerprint(L1) != fingerprint(L2):
        return None
    n = L1.dim

    probe = _probe_rows(L1)
    target = [[L1.inner(v, w) for w in probe] for v in probe]
    probe_norms = [target[i][i] for i in range(n)]

    # candidate images per probe level, grouped by exact norm
    shells: dict[Fraction, list[tuple]] = {}
    for nrm in sorted(set(probe_norms)):
        shells[nrm] = [v for v, nv in lat.ball(L2, nrm) if nv == nrm]

    # numpy product tables per shell for fast compatibility filtering
    gi2, s2 = clear_denominators(L2.gram)
    g2np = np.array([[int(x) for x in row] for row in gi2], dtype=np.int64)
    arrs = {nrm: np.array(vs, dtype=np.int64) for nrm, vs in shells.items()}

    # order levels by candidate scarcity (static heuristic)
    order = sorted(range(n), key=lambda i: (len(shells[probe_norms[i]]), i))

    chosen: list[np.ndarray] = []

    def compatible(level_pos: int) -> np.ndarray:
        i = order[level_pos]
        cand = arrs[probe_norms[i]]
        ok = np.ones(len(cand), dtype=bool)
        for pos in range(level_pos):
            j = order[pos]
            need = target[i][j]
            prods = cand @ (g2np @ chosen[pos])
            ok &= prods * need.denominator == need.numerator * s2
        return cand[ok]

    found: list[IntMatrix] = []

    def verify() -> IntMatrix | None:
        v = mat([probe[order[k]] for k in range(n)])
        w = mat([tuple(int(x) for x in chosen[k]) for k in range(n)])
        try:
            a = mat_mul(inverse(v), w)
        except Exception:
            return None
        if any(x.denominator != 1 for row in a for x in row):
            return None
        if abs(det(a)) != 1:
            return None
        if mat_mul(mat_mul(a, L2.gram), transpose(a)) != L1.gram:
            return None
        ai = inverse(a)
        assert all(x.denominator == 1 for row in ai for x in row)
        u = int_mat(ai)
        assert mat_mul(mat_mul(mat(u), L1.gram), transpose(mat(u))) == L2.gram
        return u

    def backtrack(level_pos: int) -> IntMatrix | None:
        if level_pos == n:
            return verify()
        for cand in compatible(level_pos):
            chosen.append(cand)
            w = backtrack(level_pos + 1)
            if w is not None:
                return w
            chosen.pop()
        return None

    return backtrack(0)


def canonical_key(L: Lattice):
    """Deterministic reduced-Gram key used to pick class representatives."""
    red = lll_reduce(L.gram)
    return tuple(x for row in red.gram for x in row)


def dedup_classes(lattices) -> list[tuple[Lattice, int]]:
    """Partition by isometry; representatives are canonical-key minima.

    The result is independent of input order: members fall into
    fingerprint groups, groups are split by exhaustive pairwise
    isometry, and each class reports the member with the least
    canonical key together with its multiplicity.
    """
    groups: dict[Fingerprint, list[Lattice]] = {}
    for L in lattices:
        groups.setdefault(fingerprint(L), []).append(L)
    classes: list[tuple[Lattice, int]] = []
    for fp in sorted(groups, key=lambda f: (f.dim, f.det, f.minimum,
                                            f.shell_sizes, f.min_products)):
        members = groups[fp]
        reps: list[tuple[Lattice, int]] = []
        for L in members:
            for k, (rep, cnt) in enumerate(reps):
                if is_isometric(rep, L) is not None:
                    reps[k] = (rep if canonical_key(rep) <= canonical_key(L) else L,
                               cnt + 1)
                    break
            else:
                reps.append((L, 1))
        classes.extend(reps)
    return classes
