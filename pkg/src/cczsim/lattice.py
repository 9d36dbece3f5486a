"""The rectified cubic lattice and the three CSS codes sharing its sites.

Coordinate model
----------------
Everything lives in doubled integer coordinates. Cubic-lattice vertices
sit at even triples ``(2a, 2b, 2c)`` with ``a, b`` in ``0..L-1`` and
``c`` in ``1..L-1``. Qubit sites are cubic-edge midpoints, so exactly
one coordinate is odd:

- x-edge sites ``(2a+1, 2b, 2c)``, y-edge sites ``(2a, 2b+1, 2c)``,
  z-edge sites ``(2a, 2b, 2c+1)`` with ``pz`` ranging ``1..2L-1``.

The vertical range is shifted so z-edges dangle past the top and bottom
vertex sheets. Each site hosts one qubit of each of the three codes and
all three check matrices share the same column order.

The three codes:

- ``OCT``: Z checks on squares (cubic faces, truncated faces of weight
  3 kept), X checks on octahedra (one per cubic vertex).
- ``CUB1``: Z checks on triangles of even-parity cubes, X checks on
  cuboctahedra of odd-parity cubes.
- ``CUB2``: the mirror image, odd triangles and even cuboctahedra.

Cube parity is the coordinate-sum parity of the cube's minimal corner in
undoubled units. A triangle is indexed by (corner vertex, cube) and
supports the three edge midpoints at that corner going into the cube.

Boundary survival is fixed by the code invariants rather than by any
picture: CUB1 keeps weight-2 remnant triangles only on the two
x-boundary planes and weight-4/3 remnant cuboctahedra only on the two
y-boundary planes; CUB2 swaps the roles of x and y. Keeping the other
remnant family provably anticommutes with the logical X membranes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property

import numpy as np

from cczsim import gf2


class CodeId(IntEnum):
    OCT = 0
    CUB1 = 1
    CUB2 = 2

    @property
    def label(self) -> str:
        return ("oct", "cub1", "cub2")[int(self)]

    @classmethod
    def from_label(cls, label: str) -> "CodeId":
        try:
            return {"oct": cls.OCT, "cub1": cls.CUB1, "cub2": cls.CUB2}[label.lower()]
        except KeyError:
            raise ValueError(f"unknown code label {label!r}") from None


@dataclass(eq=False)
class TwoDCode:
    """The 2D surface code left on the collapse boundary."""

    code_id: CodeId
    sites: np.ndarray          # 3D qubit index per 2D column
    hx: np.ndarray
    hz: np.ndarray
    hx_meta: list
    hz_meta: list
    logical_x: np.ndarray
    logical_z: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sites.size)

    @cached_property
    def hxp(self) -> np.ndarray:
        return gf2.pack_rows(self.hx)

    @cached_property
    def hzp(self) -> np.ndarray:
        return gf2.pack_rows(self.hz)

    @cached_property
    def z_basis(self) -> gf2.Basis:
        return gf2.Basis(self.hz, self.n)

    @cached_property
    def x_basis(self) -> gf2.Basis:
        return gf2.Basis(self.hx, self.n)


@dataclass(eq=False)
class SweepLayer:
    """One processed layer of an Appendix-style sweep.

    Each cluster couples a few same-layer sites to the generators that
    can clear them; generator supports otherwise point strictly at
    already-swept or about-to-be-swept layers.
    """

    coord: int
    cluster_sites: list        # list of int arrays (site indices)
    cluster_rows: list         # list of int arrays (Hz row indices)


@dataclass(eq=False)
class CssCode:
    code_id: CodeId
    n: int
    hz: np.ndarray
    hx: np.ndarray
    hz_meta: list
    hx_meta: list
    logical_x: np.ndarray
    logical_z: np.ndarray
    outer_mask: np.ndarray     # collapse-boundary qubits (N)
    layers: list               # index arrays, far boundary -> collapse boundary
    metachecks: np.ndarray     # rows = nodes over Hz rows
    meta_meta: list
    row_nodes: np.ndarray      # (m_z, 2) metacheck node ids, -1 = boundary
    qubit_cells: np.ndarray    # (n, 2) Hx row ids containing the qubit, -1 = none
    sweep_layers: list         # SweepLayer list in processing order
    twod: TwoDCode

    @property
    def inner_mask(self) -> np.ndarray:
        return ~self.outer_mask

    @cached_property
    def hzp(self) -> np.ndarray:
        return gf2.pack_rows(self.hz)

    @cached_property
    def hxp(self) -> np.ndarray:
        return gf2.pack_rows(self.hx)

    @cached_property
    def lxp(self) -> np.ndarray:
        return gf2.pack_vec(self.logical_x)

    @cached_property
    def lzp(self) -> np.ndarray:
        return gf2.pack_vec(self.logical_z)

    @cached_property
    def z_basis(self) -> gf2.Basis:
        """Row space of Hz, for coset membership tests."""
        return gf2.Basis(self.hz, self.n)

    @cached_property
    def x_basis(self) -> gf2.Basis:
        return gf2.Basis(self.hx, self.n)


@dataclass(eq=False)
class TriLattice:
    L: int
    sites: np.ndarray          # (n, 3) doubled coordinates
    site_index: dict
    codes: tuple
    # face ownership used by boundary_cells: per code, per Hz row, the
    # foreign X cells (codeId, hx row) owning that face; None if truncated away
    hz_owners: dict
    correspondence: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sites.shape[0])

    def code(self, code_id) -> CssCode:
        return self.codes[int(code_id)]

    # -- spec surface ------------------------------------------------------

    def inner_outer_partition(self, code_id) -> tuple:
        code = self.code(code_id)
        idx = np.arange(self.n)
        return idx[code.inner_mask], idx[code.outer_mask]

    def boundary_cells(self, code_id, membrane) -> frozenset:
        """X cells of the two other codes that can be flipped by the
        transversal gate acting on an X-error membrane of one code.

        The membrane must be a union of the square faces dual to the
        given code (edge code: axis cross sections of cubes; corner
        codes: the edge-code Z faces). A cell C of code k flips for
        some codeword X-pattern of code j exactly when the sitewise
        intersection of C with the membrane is not a Z stabiliser of
        code j, so a full logical membrane returns the empty set.
        """
        code_id = CodeId(code_id)
        bits = self._as_bits(membrane)
        if not bits.any():
            return frozenset()
        self._validate_membrane(code_id, bits)
        others = [c for c in CodeId if c != code_id]
        out = []
        for k, j in (others, reversed(others)):
            ck = self.code(k)
            zb = self.code(j).z_basis
            inter = ck.hx & bits[None, :]
            for r in range(inter.shape[0]):
                if not zb.contains(gf2.pack_vec(inter[r])):
                    out.append((k, r))
        return frozenset(out)

    def dump(self) -> str:
        """Plain-text stabiliser dump for golden-file comparisons."""
        lines = [f"tri-lattice L={self.L} n={self.n}"]
        lines.append("collapse boundaries: oct -> plane px=%d; cub1, cub2 -> plane pz=1"
                     % (2 * self.L - 2))
        for code in self.codes:
            for kind, mat, meta in (("Z", code.hz, code.hz_meta),
                                    ("X", code.hx, code.hx_meta)):
                for r in range(mat.shape[0]):
                    sup = " ".join(str(q) for q in np.flatnonzero(mat[r]))
                    lines.append(f"{code.code_id.label} {kind} {meta[r]} :: {sup}")
        return "\n".join(lines) + "\n"

    # -- helpers -----------------------------------------------------------

    def _as_bits(self, membrane) -> np.ndarray:
        if isinstance(membrane, np.ndarray) and membrane.size == self.n:
            return membrane.astype(np.uint8) % 2
        bits = np.zeros(self.n, dtype=np.uint8)
        for q in membrane:
            bits[int(q)] = 1
        return bits

    @cached_property
    def membrane_faces(self) -> dict:
        """Square faces usable as membrane building blocks, per code,
        keyed by (kind, anchor).

        Edge code: the axis cross sections of cubes (4 parallel edges,
        each the sum of 4 matching-corner triangle checks), kinds
        "qx"/"qy"/"qz" anchored at the doubled cube corner. Corner
        codes: the edge-code Z faces under their check metadata keys,
        truncated weight-3 ones included.
        """
        quads = _cross_quads(self.L, self.site_index)
        oct3 = self.codes[0]
        squares = {oct3.hz_meta[r]: np.flatnonzero(oct3.hz[r])
                   for r in range(oct3.hz.shape[0])}
        return {CodeId.OCT: quads, CodeId.CUB1: squares, CodeId.CUB2: squares}

    @cached_property
    def cell_parity(self) -> list:
        """Per code, the sites contained in an odd number of X cells.
        Nonzero only along specific lattice boundaries; a membrane
        overlapping them must do so along a closed termination line."""
        return [(code.hx.sum(0) % 2).astype(np.uint8) for code in self.codes]

    def _validate_membrane(self, code_id, bits: np.ndarray) -> None:
        covered = np.zeros(self.n, dtype=np.uint8)
        for sup in self.membrane_faces[code_id].values():
            if bits[sup].all():
                covered[sup] = 1
        if not np.array_equal(covered, bits):
            raise ValueError("membrane is not a union of dual face supports")
        # closure: flippable cells of each other code must carry even
        # total parity for every codeword draw, else the induced flip
        # pattern is an open string ending on a lattice boundary
        others = [c for c in CodeId if c != code_id]
        for k, j in (others, reversed(others)):
            v = self.cell_parity[int(k)] & bits
            if v.any() and not self.code(j).z_basis.contains(gf2.pack_vec(v)):
                raise ValueError("membrane termination line does not close")


# ---------------------------------------------------------------------------
# construction


def _enumerate_sites(L: int):
    coords = []
    for a in range(L - 1):
        for b in range(L):
            for c in range(1, L):
                coords.append((2 * a + 1, 2 * b, 2 * c))
    for a in range(L):
        for b in range(L - 1):
            for c in range(1, L):
                coords.append((2 * a, 2 * b + 1, 2 * c))
    for a in range(L):
        for b in range(L):
            for c in range(L):
                coords.append((2 * a, 2 * b, 2 * c + 1))
    coords.sort()
    sites = np.array(coords, dtype=np.int32)
    index = {tuple(p): i for i, p in enumerate(coords)}
    return sites, index


def _in_box(L: int, p) -> bool:
    px, py, pz = p
    odd = (px & 1) + (py & 1) + (pz & 1)
    if odd != 1:
        return False
    if not (0 <= px <= 2 * L - 2 and 0 <= py <= 2 * L - 2):
        return False
    if px & 1 or py & 1:
        return 2 <= pz <= 2 * L - 2
    return 1 <= pz <= 2 * L - 1


def _support_row(n, index, pts):
    row = np.zeros(n, dtype=np.uint8)
    for p in pts:
        row[index[p]] = 1
    return row


def _square_faces(L, n, index):
    """Z checks of the octahedral code: cubic faces with >= 3 surviving
    qubits (vertical faces lose one x/y edge at the top and bottom)."""
    rows, meta = [], []
    for a in range(L - 1):
        for b in range(L - 1):
            for c in range(1, L):
                pts = [(2 * a + 1, 2 * b, 2 * c), (2 * a + 1, 2 * b + 2, 2 * c),
                       (2 * a, 2 * b + 1, 2 * c), (2 * a + 2, 2 * b + 1, 2 * c)]
                rows.append(_support_row(n, index, pts))
                meta.append(("xy", (2 * a, 2 * b, 2 * c)))
    for kind, da, db in (("xz", 1, 0), ("yz", 0, 1)):
        for a in range(L - 1 if kind == "xz" else L):
            for b in range(L if kind == "xz" else L - 1):
                for c in range(L):
                    if kind == "xz":
                        cand = [(2 * a + 1, 2 * b, 2 * c), (2 * a + 1, 2 * b, 2 * c + 2),
                                (2 * a, 2 * b, 2 * c + 1), (2 * a + 2, 2 * b, 2 * c + 1)]
                    else:
                        cand = [(2 * a, 2 * b + 1, 2 * c), (2 * a, 2 * b + 1, 2 * c + 2),
                                (2 * a, 2 * b, 2 * c + 1), (2 * a, 2 * b + 2, 2 * c + 1)]
                    pts = [p for p in cand if _in_box(L, p)]
                    if len(pts) < 3:
                        continue
                    rows.append(_support_row(n, index, pts))
                    meta.append((kind, (2 * a, 2 * b, 2 * c)))
    return np.array(rows, dtype=np.uint8), meta


def _cross_quads(L, index):
    """Axis cross sections of cubes: the 4 parallel edges of a cube in
    one direction, keyed by ("qx"|"qy"|"qz", doubled cube anchor). Only
    complete quads qualify (cubes poking out of the box in x or y drop
    below 4 edges and are skipped)."""
    quads = {}
    for a in range(L - 1):
        for b in range(L - 1):
            for c in range(L):
                quads[("qz", (2 * a, 2 * b, 2 * c))] = [
                    index[(pa, pb, 2 * c + 1)]
                    for pa in (2 * a, 2 * a + 2)
                    for pb in (2 * b, 2 * b + 2)]
            for c in range(1, L - 1):
                quads[("qx", (2 * a, 2 * b, 2 * c))] = [
                    index[(2 * a + 1, pb, pc)]
                    for pb in (2 * b, 2 * b + 2)
                    for pc in (2 * c, 2 * c + 2)]
                quads[("qy", (2 * a, 2 * b, 2 * c))] = [
                    index[(pa, 2 * b + 1, pc)]
                    for pa in (2 * a, 2 * a + 2)
                    for pc in (2 * c, 2 * c + 2)]
    return {k: np.array(sorted(q), dtype=np.int64) for k, q in quads.items()}


def _octahedra(L, n, index):
    rows, meta = [], []
    for a in range(L):
        for b in range(L):
            for c in range(1, L):
                v = (2 * a, 2 * b, 2 * c)
                cand = [(v[0] + 1, v[1], v[2]), (v[0] - 1, v[1], v[2]),
                        (v[0], v[1] + 1, v[2]), (v[0], v[1] - 1, v[2]),
                        (v[0], v[1], v[2] + 1), (v[0], v[1], v[2] - 1)]
                pts = [p for p in cand if _in_box(L, p)]
                rows.append(_support_row(n, index, pts))
                meta.append(("oct", v))
    return np.array(rows, dtype=np.uint8), meta


def _cube_anchors(L, parity):
    for al in range(-1, L):
        for be in range(-1, L):
            for ga in range(0, L):
                if (al + be + ga) % 2 == parity:
                    yield al, be, ga


def _triangle_pts(L, corner, cube):
    """Candidate support of the triangle at a cube corner, with the
    missing axes of out-of-box cubes reported."""
    cx, cy, cz = corner
    al, be, ga = cube
    cand = {
        "x": (2 * al + 1, cy, cz),
        "y": (cx, 2 * be + 1, cz),
        "z": (cx, cy, 2 * ga + 1),
    }
    pts, missing = [], []
    for axis, p in cand.items():
        if _in_box(L, p):
            pts.append(p)
        else:
            missing.append(axis)
    return pts, missing


def _cube_corners(L, cube):
    al, be, ga = cube
    for u in (al, al + 1):
        for v in (be, be + 1):
            for w in (ga, ga + 1):
                if 0 <= u <= L - 1 and 0 <= v <= L - 1 and 1 <= w <= L - 1:
                    yield (2 * u, 2 * v, 2 * w)


def _triangles(L, n, index, parity, remnant_axis):
    """Z checks of one cuboctahedral code.

    Full weight-3 triangles always survive; weight-2 remnants survive
    only when the lost edge points along `remnant_axis` (the code's
    rough boundary direction).
    """
    rows, meta = [], []
    for cube in _cube_anchors(L, parity):
        for corner in _cube_corners(L, cube):
            pts, missing = _triangle_pts(L, corner, cube)
            if len(pts) == 3 or (len(pts) == 2 and missing == [remnant_axis]):
                rows.append(_support_row(n, index, pts))
                meta.append(("tri", corner, (2 * cube[0], 2 * cube[1], 2 * cube[2])))
    return np.array(rows, dtype=np.uint8), meta


def _cuboct_pts(L, cube):
    al, be, ga = cube
    x0, y0, z0 = 2 * al, 2 * be, 2 * ga
    cand = []
    for dy in (0, 2):
        for dz in (0, 2):
            cand.append((x0 + 1, y0 + dy, z0 + dz))
    for dx in (0, 2):
        for dz in (0, 2):
            cand.append((x0 + dx, y0 + 1, z0 + dz))
    for dx in (0, 2):
        for dy in (0, 2):
            cand.append((x0 + dx, y0 + dy, z0 + 1))
    return [p for p in cand if _in_box(L, p)]


def _cuboctahedra(L, n, index, parity, remnant_axis):
    """X checks of one cuboctahedral code: full and z-cut cells in the
    box, plus cell remnants on the two `remnant_axis` boundary planes."""
    rows, meta = [], []
    for cube in _cube_anchors(L, parity):
        al, be, ga = cube
        x_out = al in (-1, L - 1)
        y_out = be in (-1, L - 1)
        if x_out and y_out:
            continue
        if x_out and remnant_axis != "x":
            continue
        if y_out and remnant_axis != "y":
            continue
        pts = _cuboct_pts(L, cube)
        if not pts:
            continue
        rows.append(_support_row(n, index, pts))
        meta.append(("cuboct", (2 * al, 2 * be, 2 * ga)))
    return np.array(rows, dtype=np.uint8), meta


def _logicals(L, n, index, code_id):
    lx = np.zeros(n, dtype=np.uint8)
    lz = np.zeros(n, dtype=np.uint8)
    top = 2 * L - 1
    if code_id == CodeId.OCT:
        for a in range(L):
            for b in range(L):
                lx[index[(2 * a, 2 * b, top)]] = 1
        for c in range(L):
            lz[index[(0, 0, 2 * c + 1)]] = 1
    elif code_id == CodeId.CUB1:
        for q, p in _plane_sites(L, index, axis=0, value=0):
            lx[q] = 1
        for a in range(L):
            lz[index[(2 * a, 0, top)]] = 1
    else:
        for q, p in _plane_sites(L, index, axis=1, value=0):
            lx[q] = 1
        for b in range(L):
            lz[index[(0, 2 * b, top)]] = 1
    return lx, lz


def _plane_sites(L, index, axis, value):
    for p, q in index.items():
        if p[axis] == value:
            yield q, p


def _metachecks_oct(L, hz, meta):
    """Valid metacheck nodes are cubes whose surviving faces sum to the
    zero pattern; out-of-box cubes own a single face and never qualify."""
    face_row = {m: r for r, m in enumerate(meta)}
    m_z = hz.shape[0]
    hzp = gf2.pack_rows(hz)
    nodes, node_meta = [], []
    node_of = {}
    for al in range(-1, L):
        for be in range(-1, L):
            for ga in range(0, L):
                x0, y0, z0 = 2 * al, 2 * be, 2 * ga
                cand = [("xy", (x0, y0, z0)), ("xy", (x0, y0, z0 + 2)),
                        ("xz", (x0, y0, z0)), ("xz", (x0, y0 + 2, z0)),
                        ("yz", (x0, y0, z0)), ("yz", (x0 + 2, y0, z0))]
                rows = [face_row[m] for m in cand if m in face_row]
                if not rows:
                    continue
                if np.bitwise_xor.reduce(hzp[rows], axis=0).any():
                    continue
                ind = np.zeros(m_z, dtype=np.uint8)
                ind[rows] = 1
                node_of[(al, be, ga)] = len(nodes)
                nodes.append(ind)
                node_meta.append(("cube", (x0, y0, z0)))
    row_nodes = np.full((m_z, 2), -1, dtype=np.int64)
    for r, (kind, (x0, y0, z0)) in enumerate(meta):
        if kind == "xy":
            cubes = [(x0 // 2, y0 // 2, z0 // 2 - 1), (x0 // 2, y0 // 2, z0 // 2)]
        elif kind == "xz":
            cubes = [(x0 // 2, y0 // 2 - 1, z0 // 2), (x0 // 2, y0 // 2, z0 // 2)]
        else:
            cubes = [(x0 // 2 - 1, y0 // 2, z0 // 2), (x0 // 2, y0 // 2, z0 // 2)]
        for slot, cube in enumerate(cubes):
            row_nodes[r, slot] = node_of.get(cube, -1)
    return np.array(nodes, dtype=np.uint8), node_meta, row_nodes


def _metachecks_cub(L, hz, meta):
    """Vertex sums and cube sums of triangles; candidates filtered to
    those whose kept rows sum to zero (z-cut cubes fail, full cubes and
    surviving boundary remnant groups pass)."""
    m_z = hz.shape[0]
    hzp = gf2.pack_rows(hz)
    by_vertex, by_cube = {}, {}
    for r, (_, corner, cube) in enumerate(meta):
        by_vertex.setdefault(corner, []).append(r)
        by_cube.setdefault(cube, []).append(r)
    nodes, node_meta = [], []
    node_of = {}
    for kind, groups in (("vertex", by_vertex), ("cube", by_cube)):
        for anchor in sorted(groups):
            rows = groups[anchor]
            if np.bitwise_xor.reduce(hzp[rows], axis=0).any():
                continue
            ind = np.zeros(m_z, dtype=np.uint8)
            ind[rows] = 1
            node_of[(kind, anchor)] = len(nodes)
            nodes.append(ind)
            node_meta.append((kind, anchor))
    row_nodes = np.full((m_z, 2), -1, dtype=np.int64)
    for r, (_, corner, cube) in enumerate(meta):
        row_nodes[r, 0] = node_of.get(("vertex", corner), -1)
        row_nodes[r, 1] = node_of.get(("cube", cube), -1)
    return np.array(nodes, dtype=np.uint8), node_meta, row_nodes


def _qubit_cells(n, hx):
    cells = np.full((n, 2), -1, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    for r in range(hx.shape[0]):
        for q in np.flatnonzero(hx[r]):
            if counts[q] < 2:
                cells[q, counts[q]] = r
            counts[q] += 1
    if (counts > 2).any():
        raise AssertionError("a qubit belongs to more than two X cells")
    return cells


def _sweep_plan_oct(L, sites, index, hz_meta):
    """Integer-px layers swept in +x order; every -1 outcome names the
    unique square extending toward +x from its site."""
    face_row = {m: r for r, m in enumerate(hz_meta)}
    layers = []
    for px in range(0, 2 * L - 3, 2):
        cs, cr = [], []
        for q in np.flatnonzero((sites[:, 0] == px)):
            x, y, z = (int(v) for v in sites[q])
            if y & 1:
                key = ("xy", (x, y - 1, z))
            else:
                key = ("xz", (x, y, z - 1))
            cs.append(np.array([q], dtype=np.int64))
            cr.append(np.array([face_row[key]], dtype=np.int64))
        layers.append(SweepLayer(px, cs, cr))
    return layers


def _sweep_plan_cub(L, sites, index, hz_meta, parity):
    """Alternating pair and quad layers from the dangling top plane down
    to the collapse plane at pz=1 (never processed)."""
    tri_row = {(corner, cube): r for r, (_, corner, cube) in enumerate(hz_meta)}
    layers = []
    for pz in range(2 * L - 1, 1, -1):
        cs, cr = [], []
        if pz & 1:
            # z-edge sites; candidate triangles sit at the lower corner
            # and reach into the two matching-parity cubes above
            for q in np.flatnonzero(sites[:, 2] == pz):
                x, y, _ = (int(v) for v in sites[q])
                corner = (x, y, pz - 1)
                rows = []
                ga = (pz - 1) // 2
                for al in (x // 2 - 1, x // 2):
                    for be in (y // 2 - 1, y // 2):
                        if (al + be + ga) % 2 != parity:
                            continue
                        key = (corner, (2 * al, 2 * be, 2 * ga))
                        if key in tri_row:
                            rows.append(tri_row[key])
                cs.append(np.array([q], dtype=np.int64))
                cr.append(np.array(sorted(rows), dtype=np.int64))
        else:
            # x/y-edge sites clustered by the matching-parity cube below
            ga = pz // 2 - 1
            for al in range(-1, L):
                for be in range(-1, L):
                    if (al + be + ga) % 2 != parity:
                        continue
                    x0, y0 = 2 * al, 2 * be
                    top = [(x0 + 1, y0, pz), (x0 + 1, y0 + 2, pz),
                           (x0, y0 + 1, pz), (x0 + 2, y0 + 1, pz)]
                    qs = [index[p] for p in top if _in_box(L, p)]
                    if not qs:
                        continue
                    rows = []
                    for corner in ((x0, y0, pz), (x0 + 2, y0, pz),
                                   (x0, y0 + 2, pz), (x0 + 2, y0 + 2, pz)):
                        key = (corner, (x0, y0, 2 * ga))
                        if key in tri_row:
                            rows.append(tri_row[key])
                    if not rows:
                        continue
                    cs.append(np.array(sorted(qs), dtype=np.int64))
                    cr.append(np.array(sorted(rows), dtype=np.int64))
        layers.append(SweepLayer(pz, cs, cr))
    return layers


def _twod_oct(L, sites, index):
    x_plane = 2 * L - 2
    mask = sites[:, 0] == x_plane
    cols3d = np.flatnonzero(mask)
    local = {int(q): i for i, q in enumerate(cols3d)}
    n2 = cols3d.size

    def row_of(pts):
        row = np.zeros(n2, dtype=np.uint8)
        for p in pts:
            row[local[index[p]]] = 1
        return row

    hx, hx_meta = [], []
    for b in range(L):
        for c in range(1, L):
            cand = [(x_plane, 2 * b + 1, 2 * c), (x_plane, 2 * b - 1, 2 * c),
                    (x_plane, 2 * b, 2 * c + 1), (x_plane, 2 * b, 2 * c - 1)]
            pts = [p for p in cand if _in_box(L, p)]
            hx.append(row_of(pts))
            hx_meta.append(("star", (x_plane, 2 * b, 2 * c)))
    hz, hz_meta = [], []
    for b in range(L - 1):
        for c in range(L):
            cand = [(x_plane, 2 * b + 1, 2 * c), (x_plane, 2 * b + 1, 2 * c + 2),
                    (x_plane, 2 * b, 2 * c + 1), (x_plane, 2 * b + 2, 2 * c + 1)]
            pts = [p for p in cand if _in_box(L, p)]
            hz.append(row_of(pts))
            hz_meta.append(("plaq", (x_plane, 2 * b, 2 * c)))
    lx = row_of([(x_plane, 2 * b, 2 * L - 1) for b in range(L)])
    lz = row_of([(x_plane, 0, 2 * c + 1) for c in range(L)])
    return TwoDCode(CodeId.OCT, cols3d, np.array(hx, dtype=np.uint8),
                    np.array(hz, dtype=np.uint8), hx_meta, hz_meta, lx, lz)


def _twod_cub(L, sites, index, code_id):
    mask = sites[:, 2] == 1
    cols3d = np.flatnonzero(mask)
    local = {int(q): i for i, q in enumerate(cols3d)}
    n2 = cols3d.size
    x_parity = 1 if code_id == CodeId.CUB1 else 0   # cell-cube parity
    cell_axis = "y" if code_id == CodeId.CUB1 else "x"   # kept cell remnants
    tri_axis = "x" if code_id == CodeId.CUB1 else "y"    # kept triangle remnants

    def quad(al, be):
        pts = [(2 * al + dx, 2 * be + dy, 1) for dx in (0, 2) for dy in (0, 2)]
        pts = [p for p in pts if _in_box(L, p)]
        row = np.zeros(n2, dtype=np.uint8)
        for p in pts:
            row[local[index[p]]] = 1
        return row, pts

    hx, hx_meta, hz, hz_meta = [], [], [], []
    for al in range(-1, L):
        for be in range(-1, L):
            x_out = al in (-1, L - 1)
            y_out = be in (-1, L - 1)
            if x_out and y_out:
                continue
            par = (al + be) % 2
            row, pts = quad(al, be)
            if len(pts) == 0:
                continue
            if par == x_parity:
                # restriction of the code's bottom cell
                if (cell_axis == "y" and x_out) or (cell_axis == "x" and y_out):
                    continue
                hx.append(row)
                hx_meta.append(("cell", (2 * al, 2 * be, 0)))
            else:
                # sum of the code's bottom-cube triangles
                if (tri_axis == "x" and x_out) or (tri_axis == "y" and y_out):
                    if len(pts) != 2:
                        continue
                    hz.append(row)
                    hz_meta.append(("halfquad", (2 * al, 2 * be, 0)))
                elif not (x_out or y_out):
                    hz.append(row)
                    hz_meta.append(("quad", (2 * al, 2 * be, 0)))

    lx = np.zeros(n2, dtype=np.uint8)
    lz = np.zeros(n2, dtype=np.uint8)
    if code_id == CodeId.CUB1:
        for b in range(L):
            lx[local[index[(0, 2 * b, 1)]]] = 1
        for a in range(L):
            lz[local[index[(2 * a, 0, 1)]]] = 1
    else:
        for a in range(L):
            lx[local[index[(2 * a, 0, 1)]]] = 1
        for b in range(L):
            lz[local[index[(0, 2 * b, 1)]]] = 1
    return TwoDCode(code_id, cols3d, np.array(hx, dtype=np.uint8),
                    np.array(hz, dtype=np.uint8), hx_meta, hz_meta, lx, lz)


def build_tri_lattice(L: int) -> TriLattice:
    """Construct the three codes on the shared rectified lattice.

    Deterministic; raises ValueError for even or sub-3 sizes.
    """
    if L < 3 or L % 2 == 0:
        raise ValueError("lattice size must be an odd integer >= 3")
    sites, index = _enumerate_sites(L)
    n = sites.shape[0]

    sq_hz, sq_meta = _square_faces(L, n, index)
    oct_hx, oct_meta = _octahedra(L, n, index)
    tri1_hz, tri1_meta = _triangles(L, n, index, parity=0, remnant_axis="x")
    tri2_hz, tri2_meta = _triangles(L, n, index, parity=1, remnant_axis="y")
    cub1_hx, cub1_meta = _cuboctahedra(L, n, index, parity=1, remnant_axis="y")
    cub2_hx, cub2_meta = _cuboctahedra(L, n, index, parity=0, remnant_axis="x")

    codes = []
    for code_id, hz, hz_meta, hx, hx_meta in (
            (CodeId.OCT, sq_hz, sq_meta, oct_hx, oct_meta),
            (CodeId.CUB1, tri1_hz, tri1_meta, cub1_hx, cub1_meta),
            (CodeId.CUB2, tri2_hz, tri2_meta, cub2_hx, cub2_meta)):
        lx, lz = _logicals(L, n, index, code_id)
        if code_id == CodeId.OCT:
            outer = sites[:, 0] == 2 * L - 2
            layer_vals = [(0, v) for v in range(0, 2 * L - 1)]
            mc, mc_meta, row_nodes = _metachecks_oct(L, hz, hz_meta)
            sweep = _sweep_plan_oct(L, sites, index, hz_meta)
            twod = _twod_oct(L, sites, index)
        else:
            outer = sites[:, 2] == 1
            layer_vals = [(2, v) for v in range(2 * L - 1, 0, -1)]
            mc, mc_meta, row_nodes = _metachecks_cub(L, hz, hz_meta)
            par = 0 if code_id == CodeId.CUB1 else 1
            sweep = _sweep_plan_cub(L, sites, index, hz_meta, parity=par)
            twod = _twod_cub(L, sites, index, code_id)
        layers = [np.flatnonzero(sites[:, ax] == v) for ax, v in layer_vals]
        codes.append(CssCode(
            code_id=code_id, n=n, hz=hz, hx=hx, hz_meta=hz_meta,
            hx_meta=hx_meta, logical_x=lx, logical_z=lz, outer_mask=outer,
            layers=layers, metachecks=mc, meta_meta=mc_meta,
            row_nodes=row_nodes, qubit_cells=_qubit_cells(n, hx),
            sweep_layers=sweep, twod=twod))

    owners = _face_owner_table(codes)
    corr = np.tile(np.arange(n)[:, None], (1, 3))
    return TriLattice(L=L, sites=sites, site_index=index, codes=tuple(codes),
                      hz_owners=owners, correspondence=corr)


def _face_owner_table(codes) -> dict:
    """For each Z face, the foreign X cells owning it.

    A square face is owned by the two cuboctahedra sandwiching it; a
    triangle by the octahedron at its corner plus the cuboctahedron of
    its own cube. Owners truncated away at the boundary are None.
    """
    oct_of = {m[1]: r for r, m in enumerate(codes[CodeId.OCT].hx_meta)}
    cub_of = {
        CodeId.CUB1: {m[1]: r for r, m in enumerate(codes[CodeId.CUB1].hx_meta)},
        CodeId.CUB2: {m[1]: r for r, m in enumerate(codes[CodeId.CUB2].hx_meta)},
    }

    def cub_owner(cube_doubled):
        al, be, ga = cube_doubled[0] // 2, cube_doubled[1] // 2, cube_doubled[2] // 2
        cid = CodeId.CUB1 if (al + be + ga) % 2 == 1 else CodeId.CUB2
        r = cub_of[cid].get(cube_doubled)
        return (cid, r) if r is not None else None

    table = {}
    for code in codes:
        per_row = []
        for m in code.hz_meta:
            if m[0] == "tri":
                _, corner, cube = m
                o1 = (CodeId.OCT, oct_of[corner]) if corner in oct_of else None
                per_row.append((o1, cub_owner(cube)))
            else:
                kind, (x0, y0, z0) = m
                if kind == "xy":
                    cubes = [(x0, y0, z0 - 2), (x0, y0, z0)]
                elif kind == "xz":
                    cubes = [(x0, y0 - 2, z0), (x0, y0, z0)]
                else:
                    cubes = [(x0 - 2, y0, z0), (x0, y0, z0)]
                per_row.append(tuple(cub_owner(c) for c in cubes))
        table[code.code_id] = per_row
    return table
