import dataclasses

import numpy as np
import pytest

from cczsim.lattice import CodeId, build_tri_lattice
from cczsim import noise, pauli
from cczsim.noise import (
    NoiseConfig,
    depolarise,
    flip_measurements,
    random_half_flips,
    trial_rng,
)
from cczsim.pauli import Syndrome, tri_frame


@pytest.fixture(scope="module")
def tri3():
    return build_tri_lattice(3)


def test_config_validation():
    cfg = NoiseConfig(p=0.01, position=noise.BEFORE_CCZ, ccz_enabled=True, seed=7)
    assert cfg.position == "beforeCCZ"
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.p = 0.02
    with pytest.raises(ValueError):
        NoiseConfig(p=-0.1, position=noise.BEFORE_CCZ, ccz_enabled=True, seed=7)
    with pytest.raises(ValueError):
        NoiseConfig(p=1.2, position=noise.AFTER_CCZ, ccz_enabled=False, seed=7)
    with pytest.raises(ValueError):
        NoiseConfig(p=0.1, position="duringCCZ", ccz_enabled=True, seed=7)


def test_trial_rng_streams():
    a = trial_rng(5, 0, 42).integers(0, 1 << 30, 8)
    b = trial_rng(5, 0, 42).integers(0, 1 << 30, 8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, trial_rng(5, 0, 43).integers(0, 1 << 30, 8))
    assert not np.array_equal(a, trial_rng(5, 1, 42).integers(0, 1 << 30, 8))
    assert not np.array_equal(a, trial_rng(6, 0, 42).integers(0, 1 << 30, 8))


def test_random_half_flips_targets_one_code(tri3):
    code = tri3.codes[1]
    fr = tri_frame(tri3)
    random_half_flips(code, fr, trial_rng(1, 0, 0))
    assert fr.x_err[1].any()
    assert not fr.x_err[0].any() and not fr.x_err[2].any()
    assert not any(v.any() for v in fr.z_err)
    again = tri_frame(tri3)
    random_half_flips(code, again, trial_rng(1, 0, 0))
    assert np.array_equal(again.x_err[1], fr.x_err[1])


def test_random_half_flips_rate(tri3):
    code = tri3.codes[0]
    total = 0
    reps = 400
    for t in range(reps):
        fr = tri_frame(tri3)
        random_half_flips(code, fr, trial_rng(2, 0, t))
        total += int(fr.x_err[0].sum())
    mean = total / (reps * tri3.n)
    assert abs(mean - 0.5) < 0.02


def test_depolarise_edge_rates(tri3):
    code = tri3.codes[2]
    fr = tri_frame(tri3)
    depolarise(code, fr, 0.0, trial_rng(3, 0, 0))
    assert not fr.x_err[2].any() and not fr.z_err[2].any()
    nx = nz = nboth = 0
    reps = 400
    for t in range(reps):
        fr = tri_frame(tri3)
        depolarise(code, fr, 1.0, trial_rng(3, 1, t))
        x, z = fr.x_err[2], fr.z_err[2]
        assert np.array_equal(x | z, np.ones(tri3.n, dtype=np.uint8))
        nx += int(x.sum())
        nz += int(z.sum())
        nboth += int((x & z).sum())
    n = reps * tri3.n
    # X, Y, Z equally likely: each bit set in two of the three cases
    assert abs(nx / n - 2 / 3) < 0.02
    assert abs(nz / n - 2 / 3) < 0.02
    assert abs(nboth / n - 1 / 3) < 0.02
    with pytest.raises(ValueError):
        depolarise(code, tri_frame(tri3), 1.5, trial_rng(3, 2, 0))


def test_depolarise_marginal_rate(tri3):
    code = tri3.codes[0]
    p = 0.3
    nx = nz = 0
    reps = 600
    for t in range(reps):
        fr = tri_frame(tri3)
        depolarise(code, fr, p, trial_rng(4, 0, t))
        nx += int(fr.x_err[0].sum())
        nz += int(fr.z_err[0].sum())
    n = reps * tri3.n
    assert abs(nx / n - 2 * p / 3) < 0.015
    assert abs(nz / n - 2 * p / 3) < 0.015


def test_flip_measurements():
    bits = np.array([0, 1, 0, 0, 1, 1, 0, 1], dtype=np.uint8)
    s = Syndrome(pauli.Z_CHECKS, bits)
    out = flip_measurements(s, 0.0, trial_rng(5, 0, 0))
    assert out is not s and np.array_equal(out.bits, bits)
    out = flip_measurements(s, 1.0, trial_rng(5, 0, 1))
    assert np.array_equal(out.bits, bits ^ 1)
    assert out.family == pauli.Z_CHECKS
    assert np.array_equal(s.bits, bits)
    with pytest.raises(ValueError):
        flip_measurements(s, -0.2, trial_rng(5, 0, 2))


def test_flip_measurements_rate():
    p = 0.25
    bits = np.zeros(64, dtype=np.uint8)
    s = Syndrome(pauli.X_CHECKS, bits)
    total = 0
    reps = 300
    for t in range(reps):
        total += int(flip_measurements(s, p, trial_rng(6, 0, t)).bits.sum())
    assert abs(total / (reps * 64) - p) < 0.02
