"""Dense and bit-packed GF(2) linear algebra.

Matrices are numpy uint8 arrays with entries in {0, 1}. Hot paths pack
vectors into uint64 words, 64 qubits per word, bit q living at word
``q >> 6``, bit ``q & 63``.
"""

from __future__ import annotations

import numpy as np

# ---------------------------------------------------------------------------
# packing


def n_words(n_bits: int) -> int:
    return (n_bits + 63) >> 6


def pack_vec(v: np.ndarray) -> np.ndarray:
    """Pack a 0/1 vector into uint64 words (little-endian bit order)."""
    v = np.asarray(v, dtype=np.uint8)
    n = v.shape[-1]
    pad = n_words(n) * 64 - n
    if pad:
        v = np.concatenate([v, np.zeros(v.shape[:-1] + (pad,), dtype=np.uint8)], axis=-1)
    v = v.reshape(v.shape[:-1] + (n_words(n), 64)).astype(np.uint64)
    weights = np.uint64(1) << np.arange(64, dtype=np.uint64)
    return (v * weights).sum(axis=-1, dtype=np.uint64)


def unpack_vec(w: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of :func:`pack_vec`."""
    w = np.asarray(w, dtype=np.uint64)
    shifts = np.arange(64, dtype=np.uint64)
    bits = (w[..., :, None] >> shifts) & np.uint64(1)
    bits = bits.reshape(w.shape[:-1] + (-1,))
    return bits[..., :n_bits].astype(np.uint8)


def pack_rows(m: np.ndarray) -> np.ndarray:
    """Pack each row of a 0/1 matrix."""
    m = np.asarray(m, dtype=np.uint8)
    if m.ndim == 1:
        m = m[None, :]
    return pack_vec(m)


def popcount_words(w: np.ndarray) -> np.ndarray:
    return np.bitwise_count(w).astype(np.int64)


def weight(wvec: np.ndarray) -> int:
    """Hamming weight of a packed vector."""
    return int(popcount_words(wvec).sum())


def parity_and(a: np.ndarray, b: np.ndarray) -> int:
    """Parity of the AND of two packed vectors, i.e. the GF(2) inner product."""
    return int(popcount_words(a & b).sum()) & 1


def syndrome_packed(h_packed: np.ndarray, e_packed: np.ndarray) -> np.ndarray:
    """Row parities of ``H & e`` for a packed check matrix (rows, words)."""
    return (popcount_words(h_packed & e_packed[None, :]).sum(axis=1) & 1).astype(np.uint8)


def xor_rows(h_packed: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """XOR of the packed rows selected by a boolean mask."""
    sel = h_packed[np.asarray(mask, dtype=bool)]
    if sel.shape[0] == 0:
        return np.zeros(h_packed.shape[1], dtype=np.uint64)
    return np.bitwise_xor.reduce(sel, axis=0)


# ---------------------------------------------------------------------------
# elimination on packed rows


def _eliminate(rows: np.ndarray, n_bits: int, record: list | None = None) -> tuple[np.ndarray, list[int]]:
    """Row-reduce packed rows in place; returns (rows, pivot column list).

    The reduction is full (reduced row echelon form). If ``record`` is a
    list, the row operations are appended as (target, source) pairs so a
    caller can replay them on an augmented part.
    """
    rows = rows.copy()
    m = rows.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(n_bits):
        wrd, bit = c >> 6, np.uint64(1 << (c & 63))
        col = (rows[r:, wrd] & bit) != 0
        hits = np.nonzero(col)[0]
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            rows[[r, p]] = rows[[p, r]]
            if record is not None:
                record.append((-1, r, p))
        # clear every other 1 in this column
        col_all = (rows[:, wrd] & bit) != 0
        col_all[r] = False
        targets = np.nonzero(col_all)[0]
        if targets.size:
            rows[targets] ^= rows[r]
            if record is not None:
                for t in targets:
                    record.append((int(t), r, -1))
        pivots.append(c)
        r += 1
        if r == m:
            break
    return rows, pivots


def rank(m: np.ndarray) -> int:
    m = np.asarray(m, dtype=np.uint8)
    if m.size == 0:
        return 0
    rows, piv = _eliminate(pack_rows(m), m.shape[1])
    return len(piv)


def rref(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form (dense in, dense out) and pivot columns."""
    m = np.asarray(m, dtype=np.uint8)
    rows, piv = _eliminate(pack_rows(m), m.shape[1])
    out = unpack_vec(rows, m.shape[1])
    return out[: len(piv)], piv


def solve_right(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution x of A x = b over GF(2), or None if inconsistent."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    m, n = a.shape
    aug = np.concatenate([a, b[:, None]], axis=1)
    rows, piv = _eliminate(pack_rows(aug), n + 1)
    dense = unpack_vec(rows, n + 1)
    x = np.zeros(n, dtype=np.uint8)
    for r, c in enumerate(piv):
        if c == n:
            return None
        x[c] = dense[r, n]
    return x


def null_space(m: np.ndarray) -> np.ndarray:
    """Basis of {x : M x = 0}, one vector per row."""
    m = np.asarray(m, dtype=np.uint8)
    mm, n = m.shape
    red, piv = rref(m)
    piv_set = set(piv)
    free = [c for c in range(n) if c not in piv_set]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, c in enumerate(piv):
            basis[i, c] = red[r, f]
    return basis


def left_null_space(m: np.ndarray) -> np.ndarray:
    """Basis of {y : y M = 0}."""
    return null_space(np.asarray(m, dtype=np.uint8).T)


class Basis:
    """A fixed row-reduced basis supporting fast membership and reduction."""

    def __init__(self, vectors: np.ndarray, n_bits: int):
        vectors = np.asarray(vectors, dtype=np.uint8)
        if vectors.size == 0:
            vectors = vectors.reshape(0, n_bits)
        self.n_bits = n_bits
        rows, piv = _eliminate(pack_rows(vectors), n_bits)
        self.rows = rows[: len(piv)]
        self.pivots = np.array(piv, dtype=np.int64)
        self._piv_words = self.pivots >> 6
        self._piv_bits = (np.uint64(1) << (self.pivots & 63).astype(np.uint64))

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def reduce(self, vec_packed: np.ndarray) -> np.ndarray:
        """Canonical coset representative of a packed vector."""
        v = vec_packed.copy()
        for i in range(self.dim):
            if v[self._piv_words[i]] & self._piv_bits[i]:
                v ^= self.rows[i]
        return v

    def contains(self, vec_packed: np.ndarray) -> bool:
        return not self.reduce(vec_packed).any()
