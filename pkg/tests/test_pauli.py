import numpy as np
import pytest

from cczsim.lattice import CodeId, build_tri_lattice
from cczsim import pauli
from cczsim.pauli import (
    PauliFrame,
    Syndrome,
    commutes_with_logical,
    tri_frame,
    x_syndrome_of_z_errors,
    z_syndrome_of_x_errors,
)


@pytest.fixture(scope="module")
def tri3():
    return build_tri_lattice(3)


def test_syndrome_type():
    s = Syndrome(pauli.Z_CHECKS, [1, 0, 1])
    assert s.bits.dtype == np.uint8
    c = s.copy()
    c.bits[0] ^= 1
    assert s.bits[0] == 1
    with pytest.raises(ValueError):
        Syndrome("parities", [0])


def test_frame_zeros_copy_and_vec(tri3):
    fr = tri_frame(tri3)
    assert len(fr.x_err) == len(fr.z_err) == 3
    assert all(v.shape == (tri3.n,) for v in fr.x_err + fr.z_err)
    # vec aliases the stored array so channels can mutate in place
    fr.vec(CodeId.CUB1, "X")[7] = 1
    assert fr.x_err[1][7] == 1
    cp = fr.copy()
    cp.vec(CodeId.CUB1, "X")[7] = 0
    assert fr.x_err[1][7] == 1


def test_mixed_sizes():
    fr = PauliFrame.zeros([5, 3, 8])
    assert fr.vec(CodeId.OCT, "Z").shape == (5,)
    assert fr.vec(CodeId.CUB2, "X").shape == (8,)


def test_syndrome_linearity(tri3):
    rng = np.random.default_rng(11)
    for code in tri3.codes:
        a = rng.integers(0, 2, tri3.n, dtype=np.uint8)
        b = rng.integers(0, 2, tri3.n, dtype=np.uint8)
        fa, fb, fab = tri_frame(tri3), tri_frame(tri3), tri_frame(tri3)
        fa.vec(code.code_id, "X")[:] = a
        fb.vec(code.code_id, "X")[:] = b
        fab.vec(code.code_id, "X")[:] = a ^ b
        sa = z_syndrome_of_x_errors(code, fa)
        sb = z_syndrome_of_x_errors(code, fb)
        sab = z_syndrome_of_x_errors(code, fab)
        assert sa.family == pauli.Z_CHECKS
        assert np.array_equal(sab.bits, sa.bits ^ sb.bits)


def test_stabilisers_are_silent(tri3):
    rng = np.random.default_rng(12)
    for code in tri3.codes:
        fr = tri_frame(tri3)
        combo = rng.integers(0, 2, code.hx.shape[0], dtype=np.uint8)
        fr.vec(code.code_id, "X")[:] = (combo @ code.hx) % 2
        assert not z_syndrome_of_x_errors(code, fr).bits.any()
        combo = rng.integers(0, 2, code.hz.shape[0], dtype=np.uint8)
        fr.vec(code.code_id, "Z")[:] = (combo @ code.hz) % 2
        assert not x_syndrome_of_z_errors(code, fr).bits.any()


def test_single_qubit_syndrome_is_check_column(tri3):
    code = tri3.codes[0]
    for q in (0, tri3.n // 2, tri3.n - 1):
        fr = tri_frame(tri3)
        fr.vec(code.code_id, "X")[q] = 1
        assert np.array_equal(z_syndrome_of_x_errors(code, fr).bits,
                              code.hz[:, q])
        fr = tri_frame(tri3)
        fr.vec(code.code_id, "Z")[q] = 1
        assert np.array_equal(x_syndrome_of_z_errors(code, fr).bits,
                              code.hx[:, q])


def test_length_mismatch_raises(tri3):
    fr = PauliFrame.zeros([tri3.n, tri3.n - 1, tri3.n])
    with pytest.raises(ValueError):
        z_syndrome_of_x_errors(tri3.codes[1], fr)


def test_commutes_with_logical_examples(tri3):
    for code in tri3.codes:
        assert commutes_with_logical(code, tri_frame(tri3), "Z")
        assert commutes_with_logical(code, tri_frame(tri3), "X")

        fr = tri_frame(tri3)
        fr.vec(code.code_id, "Z")[:] = code.logical_z
        assert not commutes_with_logical(code, fr, "Z")

        fr = tri_frame(tri3)
        fr.vec(code.code_id, "X")[:] = code.logical_x
        assert not commutes_with_logical(code, fr, "X")

        fr = tri_frame(tri3)
        fr.vec(code.code_id, "Z")[:] = code.hz[0]
        assert commutes_with_logical(code, fr, "Z")


def test_commutes_rejects_noisy_frames(tri3):
    code = tri3.codes[2]
    fr = tri_frame(tri3)
    fr.vec(code.code_id, "Z")[0] = 1
    with pytest.raises(ValueError):
        commutes_with_logical(code, fr, "Z")
    fr = tri_frame(tri3)
    fr.vec(code.code_id, "X")[0] = 1
    with pytest.raises(ValueError):
        commutes_with_logical(code, fr, "X")
    with pytest.raises(ValueError):
        commutes_with_logical(code, tri_frame(tri3), "Y")


def test_commutes_is_representative_independent(tri3):
    # verdict depends only on the error coset, never on which stabiliser
    # dressing the decoder happened to leave behind
    rng = np.random.default_rng(13)
    for _ in range(1000):
        code = tri3.codes[rng.integers(3)]
        logical = bool(rng.integers(2))
        combo = rng.integers(0, 2, code.hz.shape[0], dtype=np.uint8)
        vec = (combo @ code.hz) % 2
        if logical:
            vec ^= code.logical_z
        fr = tri_frame(tri3)
        fr.vec(code.code_id, "Z")[:] = vec
        assert commutes_with_logical(code, fr, "Z") == (not logical)
