import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cczsim import gf2


# Independent dense reference, deliberately naive.
def ref_rank(m):
    m = [row.copy() for row in np.asarray(m, dtype=np.uint8)]
    n = len(m[0]) if m else 0
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(m)) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        for i in range(len(m)):
            if i != r and m[i][c]:
                m[i] = (m[i] + m[r]) % 2
        r += 1
    return r


def rand_matrix(rng, m, n, density=0.4):
    return (rng.random((m, n)) < density).astype(np.uint8)


@st.composite
def matrices(draw):
    m = draw(st.integers(1, 12))
    n = draw(st.integers(1, 80))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return rand_matrix(rng, m, n)


def test_pack_roundtrip():
    rng = np.random.default_rng(0)
    for n in [1, 63, 64, 65, 200]:
        v = (rng.random(n) < 0.5).astype(np.uint8)
        assert np.array_equal(gf2.unpack_vec(gf2.pack_vec(v), n), v)


def test_pack_rows_shape():
    rng = np.random.default_rng(1)
    m = rand_matrix(rng, 5, 130)
    p = gf2.pack_rows(m)
    assert p.shape == (5, 3)
    assert np.array_equal(gf2.unpack_vec(p, 130), m)


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_matches_reference(m):
    assert gf2.rank(m) == ref_rank(m)


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rref_preserves_rowspace(m):
    red, piv = gf2.rref(m)
    assert red.shape[0] == len(piv) == ref_rank(m)
    both = np.concatenate([m, red], axis=0)
    assert ref_rank(both) == ref_rank(m)
    # pivot columns carry exactly one 1 within the reduced rows
    for r, c in enumerate(piv):
        col = red[:, c]
        assert col.sum() == 1 and col[r] == 1


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_solve_right(m):
    rng = np.random.default_rng(int(m.sum()) + m.shape[1])
    x_true = (rng.random(m.shape[1]) < 0.5).astype(np.uint8)
    b = (m @ x_true) % 2
    x = gf2.solve_right(m, b)
    assert x is not None
    assert np.array_equal((m @ x) % 2, b)


def test_solve_right_inconsistent():
    a = np.array([[1, 1, 0], [1, 1, 0]], dtype=np.uint8)
    b = np.array([0, 1], dtype=np.uint8)
    assert gf2.solve_right(a, b) is None


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_null_space(m):
    ns = gf2.null_space(m)
    assert ns.shape[0] == m.shape[1] - ref_rank(m)
    if ns.shape[0]:
        assert not ((m @ ns.T) % 2).any()
        assert ref_rank(ns) == ns.shape[0]


@settings(max_examples=40, deadline=None)
@given(matrices())
def test_left_null_space(m):
    lns = gf2.left_null_space(m)
    assert lns.shape[0] == m.shape[0] - ref_rank(m)
    if lns.shape[0]:
        assert not ((lns @ m) % 2).any()


def test_syndrome_packed_matches_dense():
    rng = np.random.default_rng(7)
    h = rand_matrix(rng, 40, 200)
    e = (rng.random(200) < 0.1).astype(np.uint8)
    hp = gf2.pack_rows(h)
    ep = gf2.pack_vec(e)
    assert np.array_equal(gf2.syndrome_packed(hp, ep), (h @ e) % 2)


def test_parity_and_weight():
    a = gf2.pack_vec(np.array([1, 0, 1, 1], dtype=np.uint8))
    b = gf2.pack_vec(np.array([1, 1, 1, 0], dtype=np.uint8))
    assert gf2.parity_and(a, b) == 0
    assert gf2.weight(a) == 3


def test_xor_rows():
    rng = np.random.default_rng(3)
    h = rand_matrix(rng, 10, 90)
    hp = gf2.pack_rows(h)
    mask = rng.random(10) < 0.5
    expect = h[mask].sum(axis=0) % 2 if mask.any() else np.zeros(90, dtype=np.uint8)
    got = gf2.unpack_vec(gf2.xor_rows(hp, mask), 90)
    assert np.array_equal(got, expect.astype(np.uint8))


class TestBasis:
    def test_membership(self):
        rng = np.random.default_rng(11)
        gens = rand_matrix(rng, 8, 100)
        basis = gf2.Basis(gens, 100)
        assert basis.dim == ref_rank(gens)
        # random combination of generators is inside
        mask = rng.random(8) < 0.5
        combo = gens[mask].sum(axis=0) % 2 if mask.any() else np.zeros(100, dtype=np.uint8)
        assert basis.contains(gf2.pack_vec(combo))

    def test_non_membership(self):
        gens = np.eye(4, 10, dtype=np.uint8)
        basis = gf2.Basis(gens, 10)
        outside = np.zeros(10, dtype=np.uint8)
        outside[7] = 1
        assert not basis.contains(gf2.pack_vec(outside))

    def test_reduce_is_coset_invariant(self):
        rng = np.random.default_rng(13)
        gens = rand_matrix(rng, 6, 64)
        basis = gf2.Basis(gens, 64)
        v = (rng.random(64) < 0.5).astype(np.uint8)
        shifted = (v + gens[2]) % 2
        r1 = basis.reduce(gf2.pack_vec(v))
        r2 = basis.reduce(gf2.pack_vec(shifted))
        assert np.array_equal(r1, r2)

    def test_empty(self):
        basis = gf2.Basis(np.zeros((0, 16), dtype=np.uint8), 16)
        assert basis.dim == 0
        v = gf2.pack_vec(np.ones(16, dtype=np.uint8))
        assert not basis.contains(v)


def test_rejects_nothing_on_empty_rank():
    assert gf2.rank(np.zeros((0, 5), dtype=np.uint8)) == 0
