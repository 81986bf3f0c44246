"""Bitmask encodings of uniform hypergraphs and vectorised relabeling.

A hypergraph on ``n`` vertices is encoded as an integer with one bit per
``r``-subset.  Subsets are listed in colex order (sorted by their largest
element, then the next largest, ...) and the subset with colex index ``t``
owns bit ``T - 1 - t`` where ``T = C(n, r)``.  The first colex subset is the
most significant bit, so integer comparison of two masks is lexicographic
comparison of their bit strings read in colex order.

Relabeling many masks by many permutations is the hot loop of the whole
package, so it is done with byte lookup tables: for every permutation and
every byte of the mask we store the image of that byte.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb, factorial

import numpy as np

# n! * ceil(T/8) * 256 * 8 bytes must stay small; 7! rows is ~50MB at r=3.
TABLE_MAX_N = 7


def colex_index(subset) -> int:
    """Colex rank of a strictly increasing tuple."""
    return sum(comb(x, i + 1) for i, x in enumerate(subset))


@lru_cache(maxsize=None)
def subsets(n: int, r: int) -> tuple[tuple[int, ...], ...]:
    """All r-subsets of range(n) in colex order."""
    return tuple(sorted(itertools.combinations(range(n), r), key=lambda s: s[::-1]))


@lru_cache(maxsize=None)
def subset_array(n: int, r: int) -> np.ndarray:
    subs = subsets(n, r)
    if not subs:
        return np.zeros((0, r), dtype=np.int64)
    return np.array(subs, dtype=np.int64)


def bit_of(subset, n: int, r: int) -> int:
    return comb(n, r) - 1 - colex_index(subset)


def mask_from_edges(edges, n: int, r: int) -> int:
    total = comb(n, r)
    m = 0
    for e in edges:
        m |= 1 << (total - 1 - colex_index(e))
    return m


def edges_from_mask(mask: int, n: int, r: int) -> list[tuple[int, ...]]:
    total = comb(n, r)
    subs = subsets(n, r)
    out = [subs[t] for t in range(total) if (mask >> (total - 1 - t)) & 1]
    out.sort()
    return out


@lru_cache(maxsize=None)
def permutations_array(n: int) -> np.ndarray:
    """All permutations of range(n) in lexicographic order, shape (n!, n).

    Lexicographic order means the permutations fixing 0..s-1 pointwise are
    exactly the first (n-s)! rows, which is how flag canonical forms
    restrict the relabeling group.
    """
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def image_bits(perms: np.ndarray, n: int, r: int) -> np.ndarray:
    """For each permutation row, the bit position each bit is sent to.

    Column j describes the source bit j (not colex rank j).
    """
    subs = subset_array(n, r)
    total = len(subs)
    if total == 0:
        return np.zeros((len(perms), 0), dtype=np.int64)
    img = np.sort(perms[:, subs], axis=2)
    ranks = np.zeros(img.shape[:2], dtype=np.int64)
    for i in range(r):
        col = img[:, :, i]
        ranks += _comb_column(col, i + 1)
    return (total - 1 - ranks)[:, ::-1]


def _comb_column(x: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(x)
    for j in range(k):
        out = out * (x - j)
    return out // factorial(k)


@lru_cache(maxsize=None)
def byte_tables(n: int, r: int) -> np.ndarray:
    """Lookup tables of shape (n!, nbytes, 256) mapping each mask byte to its image."""
    total = comb(n, r)
    if total > 64:
        raise ValueError("byte tables need C(n, r) <= 64")
    if n > TABLE_MAX_N:
        raise ValueError(f"byte tables limited to n <= {TABLE_MAX_N}")
    perms = permutations_array(n)
    nbytes = max(1, (total + 7) // 8)
    img = image_bits(perms, n, r)
    contrib = np.zeros((len(perms), nbytes * 8), dtype=np.uint64)
    if total:
        contrib[:, :total] = np.left_shift(np.uint64(1), img.astype(np.uint64))
    byte_bits = ((np.arange(256)[:, None] >> np.arange(8)[None, :]) & 1).astype(np.uint64)
    tables = np.zeros((len(perms), nbytes, 256), dtype=np.uint64)
    for k in range(nbytes):
        block = contrib[:, 8 * k : 8 * k + 8]  # (P, 8)
        # distinct powers of two, so the sum is the bitwise OR
        tables[:, k, :] = block @ byte_bits.T
    return tables


def relabel_many(masks: np.ndarray, n: int, r: int, perm_rows: np.ndarray) -> np.ndarray:
    """Images of every mask under selected permutations, shape (len(perm_rows), len(masks))."""
    tables = byte_tables(n, r)[perm_rows]
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    by = masks.astype("<u8").view(np.uint8).reshape(len(masks), 8)
    out = np.zeros((len(perm_rows), len(masks)), dtype=np.uint64)
    for k in range(tables.shape[1]):
        out |= tables[:, k, :][:, by[:, k]]
    return out


def min_relabel(masks, n: int, r: int, fixed: int = 0, chunk_elems: int = 1 << 21) -> np.ndarray:
    """Minimal image of each mask over permutations fixing 0..fixed-1 pointwise."""
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    nperm = factorial(n - fixed)
    if len(masks) == 0:
        return masks.copy()
    tables = byte_tables(n, r)[:nperm]
    by = masks.astype("<u8").view(np.uint8).reshape(len(masks), 8)
    best = np.empty(len(masks), dtype=np.uint64)
    step = max(1, chunk_elems // nperm)
    for lo in range(0, len(masks), step):
        hi = min(len(masks), lo + step)
        acc = np.zeros((nperm, hi - lo), dtype=np.uint64)
        for k in range(tables.shape[1]):
            acc |= tables[:, k, :][:, by[lo:hi, k]]
        best[lo:hi] = acc.min(axis=0)
    return best


def min_relabel_generic(edges, n: int, r: int, fixed: int = 0) -> int:
    """Exhaustive minimum for sizes outside the byte-table range.

    With equal edge counts, a smaller mask is one whose descending list of
    occupied bit positions is lexicographically smaller, so the minimum is
    found by a lexsort over permutations.
    """
    total = comb(n, r)
    if not edges:
        return 0
    perms = _perms_fixing(n, fixed)
    e = np.array(edges, dtype=np.int64)
    best = None
    step = max(1, (1 << 22) // (len(edges) * r))
    for lo in range(0, len(perms), step):
        img = np.sort(perms[lo : lo + step][:, e], axis=2)
        ranks = np.zeros(img.shape[:2], dtype=np.int64)
        for i in range(r):
            ranks += _comb_column(img[:, :, i], i + 1)
        pos = np.sort(total - 1 - ranks, axis=1)[:, ::-1]
        order = np.lexsort(pos.T[::-1])
        row = tuple(int(p) for p in pos[order[0]])
        if best is None or row < best:
            best = row
    m = 0
    for p in best:
        m |= 1 << p
    return m


def _perms_fixing(n: int, fixed: int) -> np.ndarray:
    if n <= 9:
        return permutations_array(n)[: factorial(n - fixed)]
    raise ValueError("exhaustive relabeling limited to n <= 9")


def submasks(bits: np.ndarray, seqs: np.ndarray, n_big: int, r: int) -> np.ndarray:
    """Induced masks of vertex sequences.

    ``bits`` is a (G, C(n_big, r)) 0/1 matrix of host masks (bit position
    order), ``seqs`` a (S, m) array of distinct host vertices; the i-th
    vertex of a sequence becomes vertex i of the induced hypergraph.
    Returns (G, S) masks on m vertices.
    """
    m = seqs.shape[1]
    sub = subset_array(m, r)
    tot_small = len(sub)
    if tot_small == 0:
        return np.zeros((bits.shape[0], seqs.shape[0]), dtype=np.uint64)
    host = np.sort(seqs[:, sub], axis=2)  # (S, t, r)
    ranks = np.zeros(host.shape[:2], dtype=np.int64)
    for i in range(r):
        ranks += _comb_column(host[:, :, i], i + 1)
    src = comb(n_big, r) - 1 - ranks  # (S, t) bit positions in host
    weights = np.left_shift(np.uint64(1), np.arange(tot_small - 1, -1, -1, dtype=np.uint64))
    out = np.zeros((bits.shape[0], seqs.shape[0]), dtype=np.uint64)
    for t in range(tot_small):
        col = bits[:, src[:, t]].astype(np.uint64)
        out |= col * weights[t]
    return out


def mask_bits(masks: np.ndarray, total: int) -> np.ndarray:
    """(G, total) 0/1 matrix; column j holds bit j of each mask."""
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    shifts = np.arange(total, dtype=np.uint64)
    return ((masks[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)
