import numpy as np
import pytest

from cczsim.ccz import (
    MembraneSpec,
    apply_transversal_ccz,
    face_patch,
    logical_failure_condition,
    sample_projection,
)
from cczsim.lattice import CodeId, build_tri_lattice
from cczsim.pauli import tri_frame, x_syndrome_of_z_errors


@pytest.fixture(scope="module")
def tri5():
    return build_tri_lattice(5)


@pytest.fixture(scope="module")
def tri7():
    return build_tri_lattice(7)


def boundary_row_sets(stats):
    rows = {cid: set() for cid in CodeId}
    for cells in stats.boundaries:
        for cid, r in cells:
            rows[cid].add(r)
    return rows


def assert_flips_confined(stats, skip=()):
    for cid in CodeId:
        if cid in skip:
            continue
        freq = stats.flip_freq(cid)
        mask = np.ones(freq.shape[0], dtype=bool)
        mask[sorted(boundary_row_sets(stats)[cid])] = False
        assert (freq[mask] == 0).all()


def test_membrane_support(tri5):
    one = face_patch(tri5, CodeId.OCT, "qz", (2, 2, 2), (2, 2, 2))
    assert int(one.support(tri5).sum()) == 4
    # neighbouring quads share two edges; the union keeps them once
    two = face_patch(tri5, CodeId.OCT, "qz", (2, 2, 2), (4, 2, 2))
    assert len(two.faces) == 2
    assert int(two.support(tri5).sum()) == 6
    with pytest.raises(KeyError):
        MembraneSpec(CodeId.OCT, frozenset({("qz", (1, 1, 1))})).support(tri5)
    with pytest.raises(ValueError):
        face_patch(tri5, CodeId.OCT, "qz", (2, 2, 3), (2, 2, 3))
    with pytest.raises(ValueError):
        face_patch(tri5, CodeId.OCT, "xy", (0, 0, 0), (8, 8, 8))
    with pytest.raises(ValueError):
        face_patch(tri5, CodeId.CUB1, "qz", (2, 2, 2), (2, 2, 2))


def test_ccz_frame_action(tri5):
    rng = np.random.default_rng(31)
    for _ in range(50):
        fr = tri_frame(tri5)
        xs = [rng.integers(0, 2, tri5.n, dtype=np.uint8) for _ in range(3)]
        zs = [rng.integers(0, 2, tri5.n, dtype=np.uint8) for _ in range(3)]
        for c in CodeId:
            fr.vec(c, "X")[:] = xs[int(c)]
            fr.vec(c, "Z")[:] = zs[int(c)]
        apply_transversal_ccz(fr)
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            assert np.array_equal(fr.x_err[k], xs[k])
            assert np.array_equal(fr.z_err[k], zs[k] ^ (xs[i] & xs[j]))
        # the layer is its own inverse on the frame
        apply_transversal_ccz(fr)
        for k in range(3):
            assert np.array_equal(fr.z_err[k], zs[k])


def test_single_common_site(tri5):
    fr = tri_frame(tri5)
    fr.vec(CodeId.OCT, "X")[17] = 1
    fr.vec(CodeId.CUB1, "X")[17] = 1
    apply_transversal_ccz(fr)
    expect = np.zeros(tri5.n, dtype=np.uint8)
    expect[17] = 1
    assert np.array_equal(fr.vec(CodeId.CUB2, "Z"), expect)
    assert not fr.vec(CodeId.OCT, "Z").any()
    assert not fr.vec(CodeId.CUB1, "Z").any()


def test_single_quad_projection(tri5):
    quad = face_patch(tri5, CodeId.OCT, "qz", (2, 2, 2), (2, 2, 2))
    stats = sample_projection(tri5, [quad], 800, np.random.default_rng(7))
    bset = stats.boundaries[0]
    assert len(bset) == 8
    assert sum(1 for c, _ in bset if c == CodeId.CUB1) == 4
    for cid in (CodeId.CUB1, CodeId.CUB2):
        freq = stats.flip_freq(cid)
        rows = sorted(r for c, r in bset if c == cid)
        off = np.delete(freq, rows)
        assert (np.abs(freq[rows] - 0.5) < 0.1).all()
        assert (off == 0).all()
    assert (stats.flip_freq(CodeId.OCT) == 0).all()
    assert stats.boundary_odd[0][CodeId.CUB1] == 0
    assert stats.boundary_odd[0][CodeId.CUB2] == 0


def test_cub_patch_projection_mirrored(tri5):
    p1 = face_patch(tri5, CodeId.CUB1, "yz", (4, 2, 2), (4, 4, 4))
    p2 = face_patch(tri5, CodeId.CUB2, "xz", (2, 4, 2), (4, 4, 4))
    s1 = sample_projection(tri5, [p1], 600, np.random.default_rng(8))
    s2 = sample_projection(tri5, [p2], 600, np.random.default_rng(8))

    def census(stats):
        return {int(c): sum(1 for cc, _ in stats.boundaries[0] if cc == c)
                for c in CodeId if c != stats.membranes[0].code}

    # swapping the two corner codes mirrors the boundary census
    assert census(s1) == {0: 8, 2: 8}
    assert census(s2) == {0: 8, 1: 8}
    for st, own in ((s1, CodeId.CUB1), (s2, CodeId.CUB2)):
        assert (st.flip_freq(own) == 0).all()
        assert all(v == 0 for v in st.boundary_odd[0].values())
        assert_flips_confined(st)
        for cid in CodeId:
            if cid != own:
                rows = st.boundary_rows(cid)
                assert (np.abs(st.flip_freq(cid)[rows] - 0.5) < 0.12).all()


def test_full_wall_is_invisible(tri5):
    M = 8
    full = face_patch(tri5, CodeId.CUB1, "yz", (4, 0, 0), (4, M, M))
    st = sample_projection(tri5, [full], 300, np.random.default_rng(4))
    assert len(st.boundaries[0]) == 0
    assert all((st.flip_freq(c) == 0).all() for c in CodeId)


def test_invalid_membranes_rejected(tri5):
    M = 8
    bad = [
        (CodeId.CUB1, "xz", (0, 2, 0), (M, 2, M)),
        (CodeId.CUB2, "yz", (2, 0, 0), (2, M, M)),
        (CodeId.CUB1, "xy", (0, 0, 4), (M, M, 4)),
        (CodeId.OCT, "qz", (0, 0, 4), (M, 2, 4)),
    ]
    for cid, kind, lo, hi in bad:
        m = face_patch(tri5, cid, kind, lo, hi)
        with pytest.raises(ValueError, match="termination"):
            tri5.boundary_cells(cid, m.support(tri5))


def test_one_membrane_per_code(tri5):
    a = face_patch(tri5, CodeId.OCT, "qz", (2, 2, 2), (2, 2, 2))
    b = face_patch(tri5, CodeId.OCT, "qz", (4, 4, 4), (4, 4, 4))
    with pytest.raises(ValueError):
        sample_projection(tri5, [a, b], 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_projection(tri5, [a], 0, np.random.default_rng(0))


def test_linked_crossing_odd_parity(tri5):
    tongue = face_patch(tri5, CodeId.OCT, "qz", (2, 2, 4), (4, 2, 4))
    wall = face_patch(tri5, CodeId.CUB1, "yz", (4, 4, 2), (4, 4, 6))
    seam = tongue.support(tri5) & wall.support(tri5)
    assert int(seam.sum()) == 1
    st = sample_projection(tri5, [tongue, wall], 400, np.random.default_rng(9))
    n = st.n_samples
    assert st.boundary_odd[0][CodeId.CUB2] == n
    assert st.boundary_odd[1][CodeId.CUB2] == n
    assert st.boundary_odd[0][CodeId.CUB1] == 0
    assert st.boundary_odd[1][CodeId.OCT] == 0
    assert_flips_confined(st)

    # deterministic picture: the planted frame carries exactly the seam
    # string, whose flags sit one on each membrane boundary
    fr = tri_frame(tri5)
    fr.vec(CodeId.OCT, "X")[:] = tongue.support(tri5)
    fr.vec(CodeId.CUB1, "X")[:] = wall.support(tri5)
    apply_transversal_ccz(fr)
    assert np.array_equal(fr.vec(CodeId.CUB2, "Z"), seam)
    synd = x_syndrome_of_z_errors(tri5.code(CodeId.CUB2), fr).bits
    for cells in st.boundaries:
        rows = sorted(r for c, r in cells if c == CodeId.CUB2)
        assert int(synd[rows].sum()) % 2 == 1


def test_linked_crossing_other_pairings(tri7):
    # OCT tongue crossed by a CUB2 wall: charge lands on CUB1
    tongue = face_patch(tri7, CodeId.OCT, "qz", (2, 2, 4), (4, 4, 4))
    wall = face_patch(tri7, CodeId.CUB2, "xz", (6, 4, 2), (8, 4, 8))
    assert int((tongue.support(tri7) & wall.support(tri7)).sum()) == 1
    st = sample_projection(tri7, [tongue, wall], 200, np.random.default_rng(3))
    assert st.boundary_odd[0][CodeId.CUB1] == 200
    assert st.boundary_odd[1][CodeId.CUB1] == 200

    # a tall wall piercing a thin one threads its boundary loop twice:
    # the charge string enters and exits through the same boundary, so
    # the third-code parity stays even in every sample
    w1 = face_patch(tri7, CodeId.CUB1, "yz", (4, 2, 4), (4, 2, 4))
    w2 = face_patch(tri7, CodeId.CUB2, "xz", (2, 4, 2), (6, 4, 8))
    assert int((w1.support(tri7) & w2.support(tri7)).sum()) == 1
    st = sample_projection(tri7, [w1, w2], 200, np.random.default_rng(3))
    assert st.boundary_odd[0][CodeId.OCT] == 0
    assert st.boundary_odd[1][CodeId.OCT] == 0


def test_separated_membranes_even(tri7):
    tongue = face_patch(tri7, CodeId.OCT, "qz", (2, 2, 4), (4, 4, 4))
    far = face_patch(tri7, CodeId.CUB1, "yz", (10, 4, 2), (10, 6, 8))
    assert not (tongue.support(tri7) & far.support(tri7)).any()
    st = sample_projection(tri7, [tongue, far], 200, np.random.default_rng(2))
    assert st.boundary_odd[0][CodeId.CUB2] == 0
    assert st.boundary_odd[1][CodeId.CUB2] == 0


def test_projection_is_seed_deterministic(tri5):
    quad = face_patch(tri5, CodeId.OCT, "qz", (2, 4, 2), (2, 4, 2))
    a = sample_projection(tri5, [quad], 100, np.random.default_rng(42))
    b = sample_projection(tri5, [quad], 100, np.random.default_rng(42))
    for k in range(3):
        assert np.array_equal(a.flip_counts[k], b.flip_counts[k])


def test_logical_failure_condition(tri5):
    M = 8
    top = face_patch(tri5, CodeId.OCT, "qz", (0, 0, M), (M - 2, M - 2, M))
    assert logical_failure_condition(tri5, top)
    quad = face_patch(tri5, CodeId.OCT, "qz", (2, 2, 2), (2, 2, 2))
    assert not logical_failure_condition(tri5, quad)
    side1 = face_patch(tri5, CodeId.CUB1, "yz", (0, 0, 0), (0, M, M))
    assert logical_failure_condition(tri5, side1)
    mid1 = face_patch(tri5, CodeId.CUB1, "yz", (4, 0, 0), (4, M, M))
    assert logical_failure_condition(tri5, mid1)
    side2 = face_patch(tri5, CodeId.CUB2, "xz", (0, 0, 0), (M, 0, M))
    assert logical_failure_condition(tri5, side2)
    patch = face_patch(tri5, CodeId.CUB1, "yz", (4, 2, 2), (4, 4, 4))
    assert not logical_failure_condition(tri5, patch)
