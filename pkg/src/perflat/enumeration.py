"""Fincke-Pohst lattice point enumeration.

Two engines share the same Gram-matrix interface:

* ``ExactEnumerator`` works entirely in ``Fraction`` arithmetic.  Its
  output is authoritative: complete enumeration of a ball, certified
  minima, certified emptiness.
* ``NpEnumerator`` is a vectorized prefilter.  Tree bounds are floats
  (inflated by a safety margin) but every emitted vector is re-checked
  with integer arithmetic, so its output is always sound; completeness
  is only relied on as an accelerator, never for a certified claim.

Coordinates returned by both engines live in the basis of the input
Gram matrix.  Enumeration internally runs on an LLL-reduced basis.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor, isqrt, lcm, sqrt

import numpy as np

from perflat.exact import IntVec, Matrix, clear_denominators, mat
from perflat.reduction import ReducedGram, _gram_schmidt, lll_reduce

_EPS = 1e-9


def floor_sqrt(x: Fraction) -> int:
    """Largest integer t with t*t <= x (x >= 0)."""
    if x < 0:
        raise ValueError("negative radicand")
    return isqrt(x.numerator * x.denominator) // x.denominator


class ExactEnumerator:
    """Exact enumeration of all nonzero vectors in a closed norm ball.

    The Gram-Schmidt data of the LLL-reduced Gram is scaled by a single
    common denominator, after which the entire tree walk runs in plain
    integer arithmetic: at each level the admissible coordinate range is
    found by walking outward from the rounded center.
    """

    def __init__(self, gram, reduced: ReducedGram | None = None):
        self.gram = mat(gram)
        self.n = len(self.gram)
        red = reduced if reduced is not None else lll_reduce(self.gram)
        self.u = red.u
        self.red_gram = red.gram
        self.mu, self.b = _gram_schmidt([list(r) for r in red.gram])
        den = 1
        for i in range(self.n):
            den = lcm(den, self.b[i].denominator)
            for j in range(i):
                den = lcm(den, self.mu[i][j].denominator)
        self.den = den

    def _walk_collect(self, bound: Fraction, *, stop_below: bool = False):
        """All (coords, scaled norm) in the closed ball, reduced basis coords.

        With stop_below, the walk returns at the first vector of norm
        strictly below the bound.  Scaled norm means norm * den**3.
        """
        bound = Fraction(bound)
        den = self.den * bound.denominator
        bp = [int(v * den) for v in self.b]
        mu = [[int(v * den) for v in row] for row in self.mu]
        budget0 = int(bound * den ** 3)
        return self._walk_scaled(budget0, den, bp, mu, stop_below)

    def _walk_scaled(self, budget0: int, den: int, bp, mu, stop_below: bool):
        n = self.n
        out = []
        x = [0] * n
        mu_cols = [[mu[j][i] for i in range(j)] for j in range(n)]
        found_small = False

        def descend(level: int, tc, budget: int):
            nonlocal found_small
            if found_small and stop_below:
                return
            b_l = bp[level]
            t = tc[level]
            # nearest integer to -t/den
            x0 = -((2 * t + den) // (2 * den))
            for direction in (1, -1):
                xv = x0 if direction == 1 else x0 - 1
                while True:
                    if found_small and stop_below:
                        return
                    w = den * xv + t
                    cost = b_l * w * w
                    if cost > budget:
                        break
                    rem = budget - cost
                    x[level] = xv
                    if level == 0:
                        if any(x):
                            out.append((tuple(x), budget0 - rem))
                            if stop_below and budget0 - rem < budget0:
                                found_small = True
                                return
                    else:
                        murow = mu_cols[level]
                        child = [tc[k] + murow[k] * xv for k in range(level)]
                        descend(level - 1, child, rem)
                    xv += direction

        descend(n - 1, [0] * n, budget0)
        return out, den

    def ball(self, bound, strict: bool = False) -> list[tuple[IntVec, Fraction]]:
        """All (vector, norm) with 0 < norm <= bound (or < bound), lex order."""
        bound = Fraction(bound)
        res, den = self._walk_collect(bound)
        scale = den ** 3
        n = self.n
        out = []
        for coords, scaled in res:
            nrm = Fraction(scaled, scale)
            if strict and nrm >= bound:
                continue
            orig = tuple(sum(coords[i] * self.u[i][j] for i in range(n))
                         for j in range(n))
            out.append((orig, nrm))
        out.sort()
        return out

    def vectors_of_norm(self, a) -> list[IntVec]:
        a = Fraction(a)
        return [v for v, nrm in self.ball(a) if nrm == a]

    def exists_below(self, bound) -> IntVec | None:
        """A vector of norm strictly below bound, or None (exhaustively)."""
        bound = Fraction(bound)
        res, den = self._walk_collect(bound, stop_below=True)
        scale = den ** 3
        n = self.n
        for coords, scaled in res:
            if Fraction(scaled, scale) < bound:
                return tuple(sum(coords[i] * self.u[i][j] for i in range(n))
                             for j in range(n))
        return None

    def min_shell(self) -> tuple[Fraction, list[IntVec]]:
        """Exact minimum and the full minimal shell (both signs)."""
        start = min(self.red_gram[i][i] for i in range(self.n))
        pts = self.ball(start)
        m = min(nrm for _, nrm in pts)
        return m, [v for v, nrm in pts if nrm == m]


def lll_reduce_np(gram: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """Float LLL on a Gram matrix; returns an integer unimodular transform.

    Prefilter quality only: the result is used to precondition float
    enumeration, never to certify anything.
    """
    g = gram.astype(np.float64).copy()
    n = g.shape[0]
    u = np.eye(n, dtype=np.int64)

    def gso():
        mu = np.zeros((n, n))
        b = np.zeros(n)
        for i in range(n):
            for j in range(i):
                mu[i, j] = (g[i, j] - np.dot(mu[i, :j] * mu[j, :j], b[:j])) / b[j]
            b[i] = g[i, i] - np.dot(mu[i, :i] ** 2, b[:i])
            mu[i, i] = 1.0
        return mu, b

    k = 1
    guard = 0
    while k < n and guard < 10000:
        guard += 1
        mu, b = gso()
        for j in range(k - 1, -1, -1):
            r = round(mu[k, j])
            if r:
                u[k] -= r * u[j]
                g[k, :] -= r * g[j, :]
                g[:, k] -= r * g[:, j]
                mu, b = gso()
        if b[k] >= (delta - mu[k, k - 1] ** 2) * b[k - 1]:
            k += 1
        else:
            g[[k - 1, k], :] = g[[k, k - 1], :]
            g[:, [k - 1, k]] = g[:, [k, k - 1]]
            u[[k - 1, k]] = u[[k, k - 1]]
            k = max(k - 1, 1)
    return u


class NpEnumerator:
    """Vectorized enumeration with exact integer post-filtering."""

    def __init__(self, gram, reduced: ReducedGram | None = None):
        self.gram = mat(gram)
        self.n = len(self.gram)
        red = reduced if reduced is not None else lll_reduce(self.gram)
        self.u = np.array(red.u, dtype=np.int64)
        gi, s = clear_denominators(red.gram)
        self.gram_int = np.array(gi, dtype=np.int64)
        self.scale = s
        mu, b = _gram_schmidt([list(r) for r in red.gram])
        self.mu = np.array([[float(v) for v in row] for row in mu])
        self.b = np.array([float(v) for v in b])

    def blocks(self, bound, strict: bool = False, max_rows: int = 1 << 17,
               top_filter=None):
        """Yield int64 arrays of nonzero vectors with norm <= bound (< if strict).

        Every row is verified by an exact integer norm evaluation; rows
        are in the input basis.  Order is deterministic.  top_filter
        restricts the coordinate chosen at the outermost level (used to
        partition long sweeps into resumable units).
        """
        bound = Fraction(bound)
        n = self.n
        bf = float(bound) * (1.0 + _EPS) + _EPS
        num, den = bound.numerator, bound.denominator
        gmax = int(np.abs(self.gram_int).max()) if n else 0

        # stack of (level, X, S, R): X holds coords for columns level..n-1
        x0 = np.zeros((1, n), dtype=np.int64)
        s0 = np.zeros((1, n))
        r0 = np.array([bf])
        stack = [(n, x0, s0, r0)]
        while stack:
            level, xs, ss, rr = stack.pop()
            lvl = level - 1
            c = ss[:, lvl]
            rad2 = rr / self.b[lvl]
            rad = np.sqrt(np.maximum(rad2, 0.0)) * (1.0 + _EPS) + _EPS
            lo = np.ceil(-c - rad).astype(np.int64)
            hi = np.floor(-c + rad).astype(np.int64)
            lengths = np.maximum(hi - lo + 1, 0)
            total = int(lengths.sum())
            if total == 0:
                continue
            parent = np.repeat(np.arange(len(lengths)), lengths)
            starts = np.repeat(np.cumsum(lengths) - lengths, lengths)
            xv = lo[parent] + (np.arange(total) - starts)
            if top_filter is not None and level == n:
                sel = np.isin(xv, np.array(sorted(top_filter), dtype=np.int64))
                parent, xv = parent[sel], xv[sel]
                total = len(xv)
                if total == 0:
                    continue
            new_x = xs[parent]
            new_x[:, lvl] = xv
            t = xv + c[parent]
            new_r = rr[parent] - self.b[lvl] * t * t
            keep = new_r >= -_EPS
            new_x, new_r = new_x[keep], new_r[keep]
            if lvl == 0:
                if len(new_x) == 0:
                    continue
                maxc = int(np.abs(new_x).max())
                if n * n * maxc * maxc * gmax >= (1 << 62):
                    norms = np.array(
                        [int(sum(int(v[i]) * int(self.gram_int[i][j]) * int(v[j])
                                 for i in range(n) for j in range(n)))
                         for v in new_x], dtype=object)
                    ok_arr = [
                        int(nv) * den < num * self.scale if strict
                        else int(nv) * den <= num * self.scale
                        for nv in norms]
                    ok = np.array(ok_arr, dtype=bool)
                    nonzero = np.any(new_x != 0, axis=1)
                    sel = new_x[ok & nonzero]
                else:
                    norms = np.einsum("ij,jk,ik->i", new_x, self.gram_int, new_x)
                    if strict:
                        ok = norms * den < num * self.scale
                    else:
                        ok = norms * den <= num * self.scale
                    nonzero = np.any(new_x != 0, axis=1)
                    sel = new_x[ok & nonzero]
                if len(sel):
                    yield sel @ self.u
                continue
            new_s = ss[parent][keep] + xv[keep, None] * self.mu[lvl, :][None, :]
            # chunk to bound memory, depth-first
            for start in range(0, len(new_x), max_rows):
                sl = slice(start, start + max_rows)
                stack.append((lvl, new_x[sl], new_s[sl], new_r[sl]))

    def array(self, bound, strict: bool = False) -> np.ndarray:
        parts = list(self.blocks(bound, strict=strict))
        if not parts:
            return np.zeros((0, self.n), dtype=np.int64)
        return np.vstack(parts)


def find_below_np(gram, bound, reduced_hint: np.ndarray | None = None) -> IntVec | None:
    """Fast search for one vector of norm strictly below bound.

    Float LLL + float tree search propose candidates; the returned
    witness is verified exactly.  ``None`` means the prefilter found
    nothing and the caller must fall back to the exact engine for a
    certificate.
    """
    g = mat(gram)
    n = len(g)
    gi, s = clear_denominators(g)
    gf = np.array(gi, dtype=np.float64) / s
    u = lll_reduce_np(gf) if reduced_hint is None else reduced_hint
    gred = u @ np.array(gi, dtype=object) @ u.T
    bound = Fraction(bound)

    # quick win: a reduced basis vector may already be short enough
    for i in range(n):
        if Fraction(int(gred[i, i]), s) < bound:
            v = tuple(int(x) for x in u[i])
            return v

    gredf = np.array([[float(int(x)) / s for x in row] for row in gred])
    try:
        mu, b = _np_gso(gredf)
    except ValueError:
        return None
    bf = float(bound) * (1 + _EPS) + _EPS
    x = np.zeros(n, dtype=np.int64)
    centers = np.zeros((n + 1, n))
    budgets = np.zeros(n + 1)
    budgets[n] = bf

    num, den = bound.numerator, bound.denominator

    def verify(coords: np.ndarray) -> IntVec | None:
        v = coords @ u
        nv = int(sum(int(v[i]) * gi[i][j] * int(v[j])
                     for i in range(n) for j in range(n)))
        if nv * den < num * s and any(v):
            return tuple(int(t) for t in v)
        return None

    def descend(level: int):
        r = budgets[level + 1]
        c = centers[level + 1][level]
        if r < 0:
            return None
        rad = sqrt(max(r / b[level], 0.0)) * (1 + _EPS) + _EPS
        lo = ceil(-c - rad)
        hi = floor(-c + rad)
        # search outward from the center for an early hit
        order = sorted(range(lo, hi + 1), key=lambda t: abs(t + c))
        for xv in order:
            x[level] = xv
            rem = r - b[level] * (xv + c) ** 2
            if rem < -_EPS:
                continue
            if level == 0:
                if any(x):
                    w = verify(x.copy())
                    if w is not None:
                        return w
            else:
                budgets[level] = rem
                centers[level][:level] = (centers[level + 1][:level]
                                          + mu[level, :level] * xv)
                w = descend(level - 1)
                if w is not None:
                    return w
        return None

    return descend(n - 1)


def _np_gso(g: np.ndarray):
    n = g.shape[0]
    mu = np.zeros((n, n))
    b = np.zeros(n)
    for i in range(n):
        for j in range(i):
            mu[i, j] = (g[i, j] - np.dot(mu[i, :j] * mu[j, :j], b[:j])) / b[j]
        b[i] = g[i, i] - np.dot(mu[i, :i] ** 2, b[:i])
        if b[i] <= 0:
            raise ValueError("not positive definite (numerically)")
        mu[i, i] = 1.0
    return mu, b
