"""Transversal CCZ action on Pauli frames and membrane statistics.

The three codes share one site table, so a single transversal CCZ layer
acts sitewise. Conjugating an X pattern through it leaves X untouched
and deposits a CZ residue that, once the other two blocks are projected
onto random codewords, becomes a Z error pattern on each block equal to
the sitewise AND of the other two X patterns.

Membranes are the X patterns of interest: unions of square faces of the
dual colour (cross-section quads for the edge code, the edge code's own
Z faces for the corner codes). sample_projection measures how the CZ
residue of a membrane shows up in X syndromes across random codeword
draws; the induced flips concentrate on the membrane's boundary cells
and obey exact parity laws that the tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .lattice import CodeId, TriLattice
from .pauli import PauliFrame


@dataclass(frozen=True)
class MembraneSpec:
    """A membrane of one code, named by dual-colour face keys.

    Keys index TriLattice.membrane_faces[code]; the membrane's qubit
    support is the union of the face supports (adjacent faces overlap
    on shared edges, which still belong to the surface once).
    """

    code: CodeId
    faces: frozenset = field(default_factory=frozenset)

    def support(self, tri: TriLattice) -> np.ndarray:
        fam = tri.membrane_faces[self.code]
        bits = np.zeros(tri.n, dtype=np.uint8)
        for key in self.faces:
            if key not in fam:
                raise KeyError(f"unknown face {key!r} for code {self.code}")
            bits[fam[key]] = 1
        return bits


def face_patch(tri: TriLattice, code_id: CodeId, kind: str, lo, hi) -> MembraneSpec:
    """Rectangular membrane: every face of the given kind whose anchor
    lies in the closed doubled-coordinate box [lo, hi]."""
    fam = tri.membrane_faces[code_id]
    kinds = {k for k, _ in fam}
    if kind not in kinds:
        raise ValueError(f"kind {kind!r} not among {sorted(kinds)} for {code_id}")
    keys = frozenset(
        (k, a) for (k, a) in fam
        if k == kind and all(lo[i] <= a[i] <= hi[i] for i in range(3)))
    if not keys:
        raise ValueError(f"no {kind!r} faces inside box {lo}..{hi}")
    return MembraneSpec(code_id, keys)


def apply_transversal_ccz(frame: PauliFrame) -> None:
    """Push the frame's X components through one transversal CCZ layer.

    Sitewise, each block picks up a Z flip wherever both other blocks
    carry X. X components never change, so the update reads all X
    vectors before touching any Z vector.
    """
    xs = [frame.vec(c, "X") for c in CodeId]
    for k, ck in enumerate(CodeId):
        i, j = (k + 1) % 3, (k + 2) % 3
        frame.vec(ck, "Z")[:] ^= xs[i] & xs[j]


@dataclass
class OutcomeStats:
    """Tallies from sample_projection.

    flip_counts[k][r] counts samples flagging X check r of code k.
    boundary_odd[m][cid] counts samples where membrane m's boundary
    cells belonging to code cid flag an odd number of times; the
    boundaries tuple holds the (code, row) cell sets themselves.
    """

    n_samples: int
    membranes: tuple
    flip_counts: list
    boundaries: tuple
    boundary_odd: tuple

    def flip_freq(self, code_id: CodeId) -> np.ndarray:
        return self.flip_counts[int(code_id)] / self.n_samples

    def boundary_rows(self, code_id: CodeId) -> np.ndarray:
        rows = set()
        for cells in self.boundaries:
            rows.update(r for cid, r in cells if cid == code_id)
        return np.array(sorted(rows), dtype=np.int64)


def sample_projection(tri: TriLattice, membranes, n_samples: int, rng,
                      chunk: int = 2048) -> OutcomeStats:
    """Monte Carlo over random codeword projections of the given
    membranes (at most one per code), CCZ applied once per sample.

    Each block's X pattern is a uniformly random codeword (every X
    generator and the logical tossed in with probability 1/2) XORed
    with that block's membrane, modelling measurement projection of
    |+>^n onto the code space. Returns per-check flip tallies and
    per-membrane boundary parity tallies.
    """
    membranes = tuple(membranes)
    seen = set()
    for m in membranes:
        if m.code in seen:
            raise ValueError(f"two membranes on code {m.code}")
        seen.add(m.code)
    if n_samples < 1:
        raise ValueError("n_samples must be positive")

    sups = [np.zeros(tri.n, dtype=np.uint8) for _ in CodeId]
    boundaries = []
    for m in membranes:
        sup = m.support(tri)
        boundaries.append(tri.boundary_cells(m.code, sup))
        sups[int(m.code)] = sup

    # stacked generators per code; float32 matmul is exact here (sums
    # stay far below 2**24) and runs on BLAS
    gens = []
    for code in tri.codes:
        g = np.vstack([code.hx, code.logical_x[None, :]])
        gens.append(np.ascontiguousarray(g.T.astype(np.float32)))
    hxt = [np.ascontiguousarray(code.hx.T.astype(np.float32))
           for code in tri.codes]

    flip_counts = [np.zeros(code.hx.shape[0], dtype=np.int64)
                   for code in tri.codes]
    odd_counts = [dict.fromkeys((c for c in CodeId if c != m.code), 0)
                  for m in membranes]
    bnd_rows = [{cid: np.array(sorted(r for c, r in cells if c == cid),
                               dtype=np.int64)
                 for cid in CodeId if cid != m.code}
                for m, cells in zip(membranes, boundaries)]

    done = 0
    while done < n_samples:
        t = min(chunk, n_samples - done)
        pats = []
        for k in range(3):
            coins = rng.integers(0, 2, (t, gens[k].shape[1])).astype(np.float32)
            w = (coins @ gens[k].T).astype(np.int64).astype(np.uint8) & 1
            w ^= sups[k][None, :]
            pats.append(w)
        for k in range(3):
            z = pats[(k + 1) % 3] & pats[(k + 2) % 3]
            s = (z.astype(np.float32) @ hxt[k]).astype(np.int64).astype(np.uint8) & 1
            flip_counts[k] += s.sum(axis=0, dtype=np.int64)
            for mi in range(len(membranes)):
                ck = CodeId(k)
                if ck == membranes[mi].code:
                    continue
                rows = bnd_rows[mi][ck]
                if rows.size:
                    par = s[:, rows].sum(axis=1) & 1
                    odd_counts[mi][ck] += int(par.sum())
        done += t

    return OutcomeStats(n_samples=n_samples, membranes=membranes,
                        flip_counts=flip_counts, boundaries=tuple(boundaries),
                        boundary_odd=tuple(odd_counts))


def logical_failure_condition(tri: TriLattice, membrane: MembraneSpec) -> bool:
    """Whether the membrane's support can host logical Z representatives
    of both other codes, i.e. whether the CZ residue it deposits under a
    worst-case projection is a joint logical error.

    For each other code, asks if some stabiliser dressing of its
    logical Z vanishes outside the membrane: a row-space consistency
    check on the outside coordinates.
    """
    sup = membrane.support(tri)
    outside = np.flatnonzero(sup == 0)
    for cid in CodeId:
        if cid == membrane.code:
            continue
        code = tri.code(cid)
        target = code.logical_z[outside]
        if gf2.solve_right(code.hz[:, outside].T, target) is None:
            return False
    return True
