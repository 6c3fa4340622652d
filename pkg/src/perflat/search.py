"""Enumeration of prime-index sublattices with pruning.

Index-p sublattices of an n-dimensional lattice correspond to
hyperplanes of the mod-p reduction, i.e. to functionals over F_p
normalized so that the first nonzero coordinate is 1.  Everything here
is organized around that parametrization:

* the generic stream yields one basis transform per functional, in
  lexicographic order;
* minimum rules reduce to finite linear conditions: a sublattice
  contains a vector shorter than b iff the subspace meets the mod-p
  image of the finite set of lattice vectors of norm below b;
* dual-minimum rules are decided by a witness sieve: a candidate's
  dual contains y with (y,y) < b iff some z in the dual of the base
  with (z,z) < p^2 b reduces into the candidate's functional line.
  Witnesses mark failures exactly (integer arithmetic); candidates
  left unmarked are adjudicated one by one with the exact engine, so
  float incompleteness can only cost time, never correctness.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct

import numpy as np

from perflat import lattice as lat
from perflat.enumeration import ExactEnumerator, NpEnumerator, find_below_np
from perflat.exact import IntVec, Matrix, clear_denominators, int_mat, inverse, is_prime, mat, mat_mul, transpose
from perflat.lattice import Lattice, SublatticeTransform, sublattice

Rat = Fraction


@dataclass(frozen=True)
class PruneRule:
    kind: str                 # "min_at_least" | "dual_min_at_least"
    bound: Rat
    stage: str = "final"      # "per_row" | "final"

    def __post_init__(self):
        if self.kind not in ("min_at_least", "dual_min_at_least"):
            raise ValueError(f"unknown rule kind {self.kind}")
        if self.stage not in ("per_row", "final"):
            raise ValueError(f"unknown stage {self.stage}")
        object.__setattr__(self, "bound", Fraction(self.bound))


@dataclass(frozen=True)
class SearchSpec:
    base: Lattice
    p: int
    corank: int = 1
    prune: tuple[PruneRule, ...] = ()
    tier: str = "fast"

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"index base {self.p} is not prime")


def normalized_functionals(n: int, p: int):
    """All functionals over F_p with first nonzero coordinate 1, lex order."""
    for pivot in range(n):
        for tail in iproduct(range(p), repeat=n - pivot - 1):
            yield (0,) * pivot + (1,) + tail


def functional_count(n: int, p: int) -> int:
    return (p ** n - 1) // (p - 1)


def transform_for_functional(p: int, phi) -> SublatticeTransform:
    """HNF basis of {x : sum phi_i x_i = 0 mod p} in base coordinates."""
    n = len(phi)
    pivot = next(i for i, c in enumerate(phi) if c % p)
    assert phi[pivot] % p == 1, "functional must be normalized"
    rows = []
    for i in range(n):
        if i == pivot:
            rows.append(tuple(p if j == pivot else 0 for j in range(n)))
        else:
            c = (-phi[i]) % p
            rows.append(tuple(1 if j == i else (c if j == pivot else 0)
                              for j in range(n)))
    return SublatticeTransform(tuple(rows), p)


def index_p_sublattices(spec: SearchSpec):
    """Stream of index-p sublattice transforms, one per hyperplane kernel."""
    if spec.corank != 1:
        raise ValueError("corank-1 stream requested on a different spec")
    n = spec.base.dim
    for phi in normalized_functionals(n, spec.p):
        yield transform_for_functional(spec.p, phi)


def sublattice_for_functional(base: Lattice, p: int, phi,
                              label: str | None = None) -> Lattice:
    return sublattice(base, transform_for_functional(p, phi).rows, label)


def dual_gram_for_functional(base: Lattice, p: int, phi) -> Matrix:
    """Gram of the dual of the functional's kernel sublattice.

    In the coordinates dual to the base, that dual lattice is spanned
    by the standard basis together with phi/p.
    """
    from perflat.exact import hnf, row_stack
    n = base.dim
    dual_gram = inverse(base.gram)
    stacked = row_stack([[p * int(i == j) for j in range(n)] for i in range(n)],
                        [list(phi)])
    h = hnf(stacked)
    rows = mat([[Fraction(x, p) for x in row] for row in h.h[:n]])
    return mat_mul(mat_mul(rows, dual_gram), transpose(rows))


# -- exact rule evaluation ----------------------------------------------------


def rule_holds(base: Lattice, t: SublatticeTransform, rule: PruneRule) -> bool:
    """Exact evaluation of a prune rule on one sublattice."""
    gram = mat_mul(mat_mul(mat(t.rows), base.gram), transpose(mat(t.rows)))
    if rule.kind == "dual_min_at_least":
        gram = inverse(gram)
    w = find_below_np(gram, rule.bound)
    if w is not None:
        return False
    return ExactEnumerator(gram).exists_below(rule.bound) is None


def filter_stream(base: Lattice, stream, rule: PruneRule):
    """Order-preserving exact filter of a transform stream."""
    for t in stream:
        if rule_holds(base, t, rule):
            yield t


# -- the witness sieve for dual-minimum scans ---------------------------------


@dataclass
class ScanResult:
    p: int
    bound: Rat
    candidates: int
    survivors: tuple[tuple[int, ...], ...]
    failed: int
    holes_checked: int
    notes: list[str] = field(default_factory=list)


def _normalize_rows_mod_p(z: np.ndarray, p: int) -> np.ndarray:
    """Projective normalization of nonzero rows mod p (first nonzero -> 1)."""
    r = z % p
    nz = r != 0
    keep = nz.any(axis=1)
    r = r[keep]
    if not len(r):
        return r
    first = np.argmax(r != 0, axis=1)
    lead = r[np.arange(len(r)), first]
    inv_table = np.array([0] + [pow(v, -1, p) for v in range(1, p)],
                         dtype=np.int64)
    r = (r * inv_table[lead][:, None]) % p
    return r


def _indices_of_rows(r: np.ndarray, p: int) -> np.ndarray:
    n = r.shape[1]
    powers = (p ** np.arange(n)).astype(np.int64)
    return r @ powers


def dual_min_scan(base: Lattice, p: int, bound,
                  witness_bound=None,
                  checkpoint: "Checkpoint | None" = None,
                  hole_limit: int | None = None,
                  progress=None) -> ScanResult:
    """Scan all index-p sublattices for min(dual) >= bound.

    Failures are established by exact integer witnesses gathered in one
    vectorized sweep of the base dual's ball of radius p^2*bound (or
    the smaller witness_bound, trading sweep time against per-hole
    checks).  Unmarked candidates are settled individually: a float
    search proposes a witness which is verified exactly, and the exact
    enumerator certifies genuine survivors.
    """
    bound = Fraction(bound)
    n = base.dim
    dual_gram = inverse(base.gram)
    candidates = functional_count(n, p)
    notes: list[str] = []

    dual_enum = ExactEnumerator(dual_gram)
    if dual_enum.exists_below(bound) is not None:
        notes.append("dual of the base is already below the bound; all fail")
        return ScanResult(p, bound, candidates, (), candidates, 0, notes)

    full_bound = p * p * bound
    wb = Fraction(witness_bound) if witness_bound is not None else full_bound
    wb = min(wb, full_bound)
    complete_sweep = wb == full_bound

    bitmap = np.zeros(p ** n, dtype=bool)
    done_parts: set[int] = set()
    if checkpoint is not None:
        loaded = checkpoint.load_bitmap()
        if loaded is not None:
            bitmap, done_parts = loaded

    npe = NpEnumerator(dual_gram)
    top_values = _top_level_values(npe, wb)
    for part, top in enumerate(top_values):
        if part in done_parts:
            continue
        for block in npe.blocks(wb, strict=True, top_filter={top}):
            r = _normalize_rows_mod_p(block, p)
            if len(r):
                bitmap[_indices_of_rows(r, p)] = True
        if checkpoint is not None:
            checkpoint.save_bitmap(bitmap, done_parts | {part})
        done_parts.add(part)
        if progress:
            progress(f"sweep partition {part + 1}/{len(top_values)}")

    # walk the normalized functionals and settle the holes
    survivors = []
    holes = 0
    failed = 0
    powers = (p ** np.arange(n)).astype(np.int64)
    chunk = 1 << 18
    for pivot in range(n):
        tail_count = p ** (n - pivot - 1)
        base_idx = powers[pivot]
        step = powers[pivot + 1] if pivot + 1 < n else p ** n
        for start in range(0, tail_count, chunk):
            stop = min(start + chunk, tail_count)
            idx = base_idx + np.arange(start, stop, dtype=np.int64) * step
            marked = bitmap[idx]
            for local in np.nonzero(~marked)[0]:
                index = int(idx[local])
                phi = _decode_index(index, p, n)
                holes += 1
                if hole_limit is not None and holes > hole_limit:
                    raise RuntimeError("hole limit exceeded; raise witness_bound")
                if _settle_hole(base, dual_gram, p, phi, bound):
                    survivors.append(phi)
                else:
                    failed += 1
            failed += int(marked.sum())
        if progress:
            progress(f"holes after pivot {pivot}: {holes}")
    if not complete_sweep:
        notes.append(f"witness sweep truncated at {wb}; {holes} holes settled exactly")
    return ScanResult(p, bound, candidates, tuple(sorted(survivors)), failed,
                      holes, notes)


def _decode_index(index: int, p: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        out.append(index % p)
        index //= p
    return tuple(out)


def _settle_hole(base: Lattice, dual_gram: Matrix, p: int, phi, bound) -> bool:
    """Exact verdict for one unmarked candidate: True iff it survives."""
    gram = _functional_dual_gram(base, dual_gram, p, phi)
    w = find_below_np(gram, bound)
    if w is not None:
        return False
    return ExactEnumerator(gram).exists_below(bound) is None


def _functional_dual_gram(base: Lattice, dual_gram: Matrix, p: int, phi) -> Matrix:
    from perflat.exact import hnf, row_stack
    n = base.dim
    stacked = row_stack([[p * int(i == j) for j in range(n)] for i in range(n)],
                        [list(phi)])
    h = hnf(stacked)
    rows = mat([[Fraction(x, p) for x in row] for row in h.h[:n]])
    return mat_mul(mat_mul(rows, dual_gram), transpose(rows))


def _top_level_values(npe: NpEnumerator, bound) -> list[int]:
    """Deterministic partition keys: admissible top-level coordinates."""
    import math
    bf = float(bound) * (1 + 1e-9) + 1e-9
    lvl = npe.n - 1
    rad = math.sqrt(max(bf / npe.b[lvl], 0.0)) * (1 + 1e-9) + 1e-9
    lo = math.ceil(-rad)
    hi = math.floor(rad)
    return list(range(lo, hi + 1))


# -- minimum prefilters as linear conditions ----------------------------------


def short_vector_classes(base: Lattice, p: int, bound) -> np.ndarray:
    """Projectively distinct mod-p classes of vectors with 0 < norm < bound.

    This is the exact bad set of the minimum rule: an index-p sublattice
    has a vector of norm < bound iff its subspace contains one of these
    classes.  The ball enumeration is exact.
    """
    pts = ExactEnumerator(base.gram).ball(bound, strict=True)
    if not pts:
        return np.zeros((0, base.dim), dtype=np.int64)
    arr = np.array([v for v, _ in pts], dtype=np.int64)
    r = _normalize_rows_mod_p(arr, p)
    if not len(r):
        return r
    return np.unique(_sorted_rows(r), axis=0)


def _sorted_rows(r: np.ndarray) -> np.ndarray:
    return r


@dataclass
class HnfSearchResult:
    candidates: int
    pruned: int
    survivors: tuple[tuple[int, ...], ...]
    final_survivors: tuple[tuple[int, ...], ...] | None
    notes: list[str] = field(default_factory=list)


def hnf_pruned_search(spec: SearchSpec, checkpoint: "Checkpoint | None" = None,
                      progress=None) -> HnfSearchResult:
    """Row-by-row pruned search over index-p sublattices.

    The sublattices are parametrized by (n-1)-row echelon matrices mod
    p built row by row; a partial matrix survives iff the lattice
    generated by p*base and the completed rows has minimum >= the
    per-row bound.  That lattice contains a shorter vector iff the row
    span meets the mod-p class of a base vector of norm below the
    bound, so the whole pruned tree is equivalent to: enumerate the
    hyperplane functionals whose kernel avoids every such class.  The
    implementation sweeps the functionals in two halves with bitset
    intersection, which visits exactly the surviving leaves.
    """
    base = spec.base
    n = base.dim
    p = spec.p
    per_row = [r for r in spec.prune if r.stage == "per_row"]
    final = [r for r in spec.prune if r.stage == "final"]
    if len(per_row) != 1 or per_row[0].kind != "min_at_least":
        raise ValueError("row scheme needs exactly one per-row minimum rule")
    row_bound = per_row[0].bound

    bad = short_vector_classes(base, p, row_bound)
    candidates = functional_count(n, p)
    if progress:
        progress(f"{len(bad)} projective short-vector classes below {row_bound}")

    survivors = _functionals_avoiding(bad, p, n, progress=progress)
    pruned = candidates - len(survivors)
    if progress:
        progress(f"{len(survivors)} sublattices survive the per-row rule")

    final_survivors = None
    if final:
        if len(final) != 1 or final[0].kind != "dual_min_at_least":
            raise ValueError("only a dual-minimum final rule is supported")
        fbound = final[0].bound
        dual_gram = inverse(base.gram)
        done = 0
        kept = []
        start_at = checkpoint.loaded_count() if checkpoint is not None else 0
        for i, phi in enumerate(survivors):
            if i < start_at:
                continue
            if _settle_hole(base, dual_gram, p, phi, fbound):
                kept.append(phi)
            done += 1
            if checkpoint is not None and done % 512 == 0:
                checkpoint.record(i + 1, kept)
            if progress and done % 2048 == 0:
                progress(f"final filter {done}/{len(survivors) - start_at}")
        if checkpoint is not None:
            kept = checkpoint.finish(len(survivors), kept)
        final_survivors = tuple(kept)
    return HnfSearchResult(candidates, pruned, tuple(survivors), final_survivors)


def _functionals_avoiding(bad: np.ndarray, p: int, n: int,
                          progress=None) -> list[tuple[int, ...]]:
    """Normalized functionals phi with phi(w) != 0 for every bad class w.

    Meet-in-the-middle: split coordinates in halves, precompute the
    value tables of both halves against the bad classes, and for each
    left half intersect the per-class allowed bitsets of the right
    half.
    """
    if len(bad) == 0:
        return list(normalized_functionals(n, p))
    nl = n // 2
    nr = n - nl
    left_vals = np.array(list(iproduct(range(p), repeat=nl)), dtype=np.int64)
    right_vals = np.array(list(iproduct(range(p), repeat=nr)), dtype=np.int64)
    # value of each functional half against each bad class
    a = (left_vals @ bad[:, :nl].T) % p          # (p^nl, k)
    b = (-(right_vals @ bad[:, nl:].T)) % p      # (p^nr, k)
    k = bad.shape[0]
    words = (len(right_vals) + 63) // 64
    masks = np.zeros((k, p, words), dtype=np.uint64)
    idx = np.arange(len(right_vals))
    for w in range(k):
        for v in range(p):
            sel = idx[b[:, w] == v]
            m = np.zeros(words, dtype=np.uint64)
            np.bitwise_or.at(m, sel // 64,
                             (np.uint64(1) << (sel % 64).astype(np.uint64)))
            masks[w, v] = m
    out = []
    full = np.full(words, ~np.uint64(0), dtype=np.uint64)
    for li in range(len(left_vals)):
        allowed = full.copy()
        row = a[li]
        for w in range(k):
            allowed &= ~masks[w, row[w]]
        if not allowed.any():
            continue
        bits = np.nonzero(
            (allowed[:, None] >> np.arange(64, dtype=np.uint64)) & np.uint64(1))
        for word, bit in zip(*bits):
            ri = int(word) * 64 + int(bit)
            if ri >= len(right_vals):
                continue
            phi = tuple(int(x) for x in left_vals[li]) + tuple(
                int(x) for x in right_vals[ri])
            if not any(phi):
                continue
            lead = next(c for c in phi if c)
            if lead == 1:
                out.append(phi)
        if progress and li % 20000 == 0 and li:
            progress(f"left half {li}/{len(left_vals)}")
    out.sort()
    return out


def hnf_row_search_reference(base: Lattice, p: int, row_bound) -> list[tuple[int, ...]]:
    """Literal row-by-row reference enumeration (small instances only).

    Walks echelon matrices mod p row by row, pruning a partial matrix
    as soon as p*base plus the completed rows contains a vector of norm
    below the bound, exactly as the pruned scheme states.  Used to
    cross-check the sieve implementation.
    """
    n = base.dim
    out = []
    for missing in range(n):
        pivots = [c for c in range(n) if c != missing]
        free_rows = [i for i, c in enumerate(pivots) if c < missing]

        def lattice_min_ok(rows) -> bool:
            from perflat.exact import hnf, row_stack
            stacked = row_stack(
                [[p * int(i == j) for j in range(n)] for i in range(n)],
                rows)
            h = hnf(stacked)
            gram = mat_mul(mat_mul(mat(h.h[:n]), base.gram),
                           transpose(mat(h.h[:n])))
            return ExactEnumerator(gram).exists_below(row_bound) is None

        def rec(i: int, rows):
            if i == n - 1:
                # completed matrix: derive the functional of the row space
                from perflat.exact import kernel_mod_p
                kern = kernel_mod_p(rows, p)
                assert len(kern) == 1
                phi = kern[0]
                lead = next(c for c in phi if c)
                inv = pow(lead, -1, p)
                out.append(tuple((c * inv) % p for c in phi))
                return
            row = [0] * n
            row[pivots[i]] = 1
            choices = range(p) if i in free_rows else (0,)
            for v in choices:
                row[missing] = v
                rows2 = rows + [tuple(row)]
                if lattice_min_ok(rows2):
                    rec(i + 1, rows2)

        rec(0, [])
    return sorted(set(out))


# -- checkpoints ---------------------------------------------------------------


class Checkpoint:
    """Append-only record of completed search partitions.

    A JSONL log records completed units of work; bulky sieve bitmaps
    are stored next to it.  Resuming replays the log and skips what is
    already done.
    """

    def __init__(self, path: str):
        self.path = path
        self._entries = []
        if os.path.exists(path):
            with open(path) as fh:
                self._entries = [json.loads(line) for line in fh if line.strip()]

    def _append(self, record: dict) -> None:
        self._entries.append(record)
        with open(self.path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # sieve bitmap phases
    def load_bitmap(self):
        npy = self.path + ".bitmap.npy"
        parts = [e["partition"] for e in self._entries if e.get("kind") == "sweep"]
        if parts and os.path.exists(npy):
            return np.load(npy), set(parts)
        return None

    def save_bitmap(self, bitmap: np.ndarray, done_parts) -> None:
        npy = self.path + ".bitmap.npy"
        tmp = self.path + ".bitmap.tmp.npy"
        np.save(tmp, bitmap)
        os.replace(tmp, npy)
        new = set(done_parts) - {e["partition"] for e in self._entries
                                 if e.get("kind") == "sweep"}
        for part in sorted(new):
            self._append({"kind": "sweep", "partition": part})

    # final-filter batches
    def loaded_count(self) -> int:
        done = 0
        for e in self._entries:
            if e.get("kind") == "final":
                done = max(done, e["done"])
        return done

    def record(self, done: int, kept) -> None:
        self._append({"kind": "final", "done": done,
                      "kept": [list(phi) for phi in kept]})

    def finish(self, total: int, kept) -> list:
        # kept lists are cumulative within a run; union across runs
        all_kept = {tuple(phi) for phi in kept}
        for e in self._entries:
            if e.get("kind") == "final":
                all_kept |= {tuple(x) for x in e["kept"]}
        merged = sorted(all_kept)
        self._append({"kind": "final", "done": total,
                      "kept": [list(phi) for phi in merged]})
        return merged