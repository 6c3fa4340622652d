"""Constructors for named lattices.

ADE root lattices are built from their Cartan Grams, tensor and
orthogonal sums by Kronecker and block constructions.  The Coxeter-Todd
lattice is built constructively, as the trace form of the Eisenstein
lift of the hexacode, and is certified against its four published
invariants (dimension 12, determinant 3^6, minimum 4, kissing 756)
before it is ever returned.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from perflat import lattice as lat
from perflat.exact import Matrix, hnf, int_mat, mat, mat_mul, transpose
from perflat.lattice import Lattice


class UnknownLabelError(KeyError):
    """No catalog entry under that label."""


class ConstructionError(RuntimeError):
    """A constructive recipe failed its own certification."""


def integer_lattice(n: int) -> Lattice:
    return Lattice([[int(i == j) for j in range(n)] for i in range(n)], f"Z{n}")


def root_lattice(label: str) -> Lattice:
    """Standard ADE root lattice from its Cartan Gram (norm-2 roots)."""
    kind, _, num = label.partition("_")
    if kind == "A" and num.isdigit() and int(num) >= 1:
        n = int(num)
        g = [[2 if i == j else (1 if abs(i - j) == 1 else 0) for j in range(n)]
             for i in range(n)]
        return Lattice(g, label)
    if kind == "D" and num.isdigit() and int(num) >= 3:
        n = int(num)
        g = [[0] * n for _ in range(n)]
        for i in range(n):
            g[i][i] = 2
        # chain e1-e2, ..., e_{n-1}-e_n plus the doubled node e_{n-1}+e_n
        for i in range(n - 2):
            g[i][i + 1] = g[i + 1][i] = -1
        g[n - 3][n - 1] = g[n - 1][n - 3] = -1
        return Lattice(g, label)
    if kind == "E" and num in ("6", "7", "8"):
        # chain 1..n-1 with the last node attached to chain node 3
        n = int(num)
        g = [[0] * n for _ in range(n)]
        for i in range(n):
            g[i][i] = 2
        for i in range(n - 2):
            g[i][i + 1] = g[i + 1][i] = -1
        g[2][n - 1] = g[n - 1][2] = -1
        return Lattice(g, label)
    raise UnknownLabelError(label)


def tensor(L1: Lattice, L2: Lattice) -> Lattice:
    """Tensor product lattice: Kronecker product of the Grams."""
    g1, g2 = L1.gram, L2.gram
    n1, n2 = len(g1), len(g2)
    g = [[g1[i1][j1] * g2[i2][j2]
          for j1 in range(n1) for j2 in range(n2)]
         for i1 in range(n1) for i2 in range(n2)]
    label = None
    if L1.label and L2.label:
        label = f"{L1.label}(x){L2.label}"
    return Lattice(g, label)


def orthogonal_sum(*ls: Lattice) -> Lattice:
    dims = [L.dim for L in ls]
    n = sum(dims)
    g = [[Fraction(0)] * n for _ in range(n)]
    off = 0
    for L in ls:
        for i in range(L.dim):
            for j in range(L.dim):
                g[off + i][off + j] = L.gram[i][j]
        off += L.dim
    label = None
    if all(L.label for L in ls):
        label = " + ".join(L.label for L in ls)
    return Lattice(g, label)


def power_sum(L: Lattice, k: int) -> Lattice:
    out = orthogonal_sum(*([L] * k))
    return out.relabel(f"{L.label}^{k}" if L.label else None)


# -- the Coxeter-Todd lattice -------------------------------------------------
#
# Eisenstein integers E = Z[w], w^2 + w + 1 = 0, as pairs (a, b) = a + bw.
# F4 = E/2E = {0, 1, w, 1+w}.  The hexacode is the [6,3] code over F4
# spanned by the evaluations (a, b, c, f(1), f(w), f(w^2)) of quadratics
# f(x) = ax^2 + bx + c; all its nonzero words have weight 4 or 6.  The
# lattice is the preimage of the code in E^6 under reduction mod 2, with
# the bilinear form Re(sum x_i conj(y_i)).

_F4_MUL = {
    (0, 0): (0, 0),
}


def _f4_mul(x, y):
    # multiply a + bw by c + dw modulo 2, using w^2 = w + 1 over F2
    a, b = x
    c, d = y
    # (a + bw)(c + dw) = ac + (ad + bc) w + bd w^2 = (ac + bd) + (ad + bc + bd) w
    return ((a * c + b * d) % 2, (a * d + b * c + b * d) % 2)


def _hexacode_words() -> list[tuple[tuple[int, int], ...]]:
    one, w = (1, 0), (0, 1)
    w2 = _f4_mul(w, w)
    elems = [(0, 0), one, w, w2]
    words = []
    for a in elems:
        for b in elems:
            for c in elems:
                def f(x):
                    ax2 = _f4_mul(a, _f4_mul(x, x))
                    bx = _f4_mul(b, x)
                    return ((ax2[0] + bx[0] + c[0]) % 2, (ax2[1] + bx[1] + c[1]) % 2)
                words.append((a, b, c, f(one), f(w), f(w2)))
    return words


def _eisenstein_gram12() -> Matrix:
    # Z-basis (1, w) per coordinate; Re(x conj(y)) has Gram [[1,-1/2],[-1/2,1]]
    g = [[Fraction(0)] * 12 for _ in range(12)]
    for i in range(6):
        g[2 * i][2 * i] = Fraction(1)
        g[2 * i + 1][2 * i + 1] = Fraction(1)
        g[2 * i][2 * i + 1] = Fraction(-1, 2)
        g[2 * i + 1][2 * i] = Fraction(-1, 2)
    return mat(g)


@lru_cache(maxsize=1)
def coxeter_todd() -> Lattice:
    """The Coxeter-Todd lattice at minimum 4, certified at construction."""
    rows = []
    for word in _hexacode_words():
        flat = []
        for (a, b) in word:
            flat.extend((a, b))
        rows.append(tuple(flat))
        # the same word multiplied by w, to generate over Z
        floww = []
        for (a, b) in word:
            # w * (a + bw) = -b + (a - b) w
            floww.extend((-b, a - b))
        rows.append(tuple(floww))
    for i in range(12):
        rows.append(tuple(2 * int(i == j) for j in range(12)))
    h = hnf(rows)
    basis = int_mat(h.h[:12])
    amb = _eisenstein_gram12()
    gram = mat_mul(mat_mul(mat(basis), amb), transpose(mat(basis)))
    L = Lattice(gram, "CT")
    _certify_ct(L)
    return L


def _certify_ct(L: Lattice) -> None:
    if L.dim != 12:
        raise ConstructionError("CT: wrong dimension")
    if lat.determinant(L) != 729:
        raise ConstructionError(f"CT: determinant {lat.determinant(L)} != 729")
    if any(x.denominator != 1 for row in L.gram for x in row):
        raise ConstructionError("CT: Gram not integral")
    if any((L.gram[i][i] % 2) != 0 for i in range(12)):
        raise ConstructionError("CT: not even")
    m, shell = lat.min_shell(L)
    if m != 4:
        raise ConstructionError(f"CT: minimum {m} != 4")
    if len(shell) != 756:
        raise ConstructionError(f"CT: kissing {len(shell)} != 756")
    from perflat.design import strongly_perfect
    verdict = strongly_perfect(L)
    if not verdict.is_design:
        raise ConstructionError("CT: minimal vectors are not a 4-design")


# -- verbatim pinned Gram matrices -------------------------------------------
#
# Two 12-dimensional Grams (stored with their 1/3 scalar exact) and the
# 4x4 norm-4 class configuration Gram used by the classification run,
# plus the 8-dimensional block Gram of four orthogonal scaled-hexagonal
# planes.

_A_A2A2 = (
    (4, -2, -2, 1),
    (-2, 4, 1, -2),
    (-2, 1, 4, -2),
    (1, -2, -2, 4),
)

_F_A2A2_NUM = (
    (12, 9, 0, 3, 3, 3, 3, 3, 3, 3, 3, 3),
    (9, 18, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6),
    (0, 6, 4, 1, 2, 2, 2, 2, 2, 2, 2, 2),
    (3, 6, 1, 4, 2, 2, 2, 2, 2, 2, 2, 2),
    (3, 6, 2, 2, 4, 1, 2, 2, 2, 2, 2, 2),
    (3, 6, 2, 2, 1, 4, 2, 2, 2, 2, 2, 2),
    (3, 6, 2, 2, 2, 2, 4, 1, 2, 2, 2, 2),
    (3, 6, 2, 2, 2, 2, 1, 4, 2, 2, 2, 2),
    (3, 6, 2, 2, 2, 2, 2, 2, 4, 1, 2, 2),
    (3, 6, 2, 2, 2, 2, 2, 2, 1, 4, 2, 2),
    (3, 6, 2, 2, 2, 2, 2, 2, 2, 2, 4, 1),
    (3, 6, 2, 2, 2, 2, 2, 2, 2, 2, 1, 4),
)

_F_GAMMA72_NUM = (
    (4, 1, 2, 2, 2, 2, 2, 2, 2, 2, 6, 6),
    (1, 4, 2, 2, 2, 2, 2, 2, 2, 2, 6, 6),
    (2, 2, 4, 1, 2, 2, 2, 2, 2, 2, 6, 6),
    (2, 2, 1, 4, 2, 2, 2, 2, 2, 2, 6, 6),
    (2, 2, 2, 2, 4, 1, 2, 2, 2, 2, 6, 6),
    (2, 2, 2, 2, 1, 4, 2, 2, 2, 2, 6, 6),
    (2, 2, 2, 2, 2, 2, 4, 1, 2, 2, 6, 6),
    (2, 2, 2, 2, 2, 2, 1, 4, 2, 2, 6, 6),
    (2, 2, 2, 2, 2, 2, 2, 2, 4, 1, 6, 6),
    (2, 2, 2, 2, 2, 2, 2, 2, 1, 4, 6, 6),
    (6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 18, 18),
    (6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 18, 42),
)


def paper_gram(name: str) -> Matrix:
    """Pinned Gram matrices used by the dimension-12 classification run."""
    if name == "A_a2a2":
        return mat(_A_A2A2)
    if name == "F_a2a2":
        return mat([[Fraction(x, 3) for x in row] for row in _F_A2A2_NUM])
    if name == "F_gamma72":
        return mat([[Fraction(x, 3) for x in row] for row in _F_GAMMA72_NUM])
    if name == "Lprime":
        # four orthogonal planes with norms 4/3 and product 2/3
        g = [[Fraction(0)] * 8 for _ in range(8)]
        for i in range(4):
            g[2 * i][2 * i] = Fraction(4, 3)
            g[2 * i + 1][2 * i + 1] = Fraction(4, 3)
            g[2 * i][2 * i + 1] = Fraction(2, 3)
            g[2 * i + 1][2 * i] = Fraction(2, 3)
        return mat(g)
    raise UnknownLabelError(name)


# -- the registry -------------------------------------------------------------


def _a1_tensor_a2() -> Lattice:
    return tensor(root_lattice("A_1"), root_lattice("A_2")).relabel("A_1(x)A_2")


def _a2_pow6() -> Lattice:
    return power_sum(root_lattice("A_2"), 6)


CATALOG: dict[str, dict] = {
    "A_2": {"build": lambda: root_lattice("A_2"), "det": 3, "min": 2, "kissing": 6},
    "D_4": {"build": lambda: root_lattice("D_4"), "det": 4, "min": 2, "kissing": 24},
    "D_6": {"build": lambda: root_lattice("D_6"), "det": 4, "min": 2, "kissing": 60},
    "E_6": {"build": lambda: root_lattice("E_6"), "det": 3, "min": 2, "kissing": 72},
    "E_7": {"build": lambda: root_lattice("E_7"), "det": 2, "min": 2, "kissing": 126},
    "E_8": {"build": lambda: root_lattice("E_8"), "det": 1, "min": 2, "kissing": 240},
    "A_1(x)A_2": {"build": _a1_tensor_a2, "det": 12, "min": 4, "kissing": 6},
    "A_2^6": {"build": _a2_pow6, "det": 729, "min": 2, "kissing": 36},
    "CT": {"build": coxeter_todd, "det": 729, "min": 4, "kissing": 756},
    "Z12": {"build": lambda: integer_lattice(12), "det": 1, "min": 1, "kissing": 24},
}


def entry(label: str) -> Lattice:
    if label not in CATALOG:
        raise UnknownLabelError(label)
    return CATALOG[label]["build"]()


def self_check(label: str) -> dict:
    """Verify the expected invariants of one entry; returns the record."""
    rec = CATALOG[label]
    L = entry(label)
    got = {
        "det": lat.determinant(L),
        "min": lat.minimum(L),
        "kissing": lat.kissing(L),
    }
    for key in ("det", "min", "kissing"):
        if got[key] != rec[key]:
            raise ConstructionError(f"{label}: {key} = {got[key]} != {rec[key]}")
    return got
