"""Phenomenological noise channels over Pauli frames.

All randomness flows through counter-based Philox streams derived from
(seed, stream, trial), so any trial of any run is reproducible in
isolation and workers never share generator state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliFrame, Syndrome

BEFORE_CCZ = "beforeCCZ"
AFTER_CCZ = "afterCCZ"

POSITIONS = (BEFORE_CCZ, AFTER_CCZ)


@dataclass(frozen=True)
class NoiseConfig:
    p: float
    position: str
    ccz_enabled: bool
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.position not in POSITIONS:
            raise ValueError(f"position must be one of {POSITIONS}")


def trial_rng(seed: int, stream: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial of one stream."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream, trial))
    return np.random.Generator(np.random.Philox(ss))


def random_half_flips(code, frame: PauliFrame, rng) -> None:
    """Uniform X pattern, the simulable stand-in for preparing every
    qubit in |+> before the stabiliser-measurement projection."""
    vec = frame.vec(code.code_id, "X")
    vec ^= rng.integers(0, 2, vec.shape[0], dtype=np.uint8)


def depolarise(code, frame: PauliFrame, p: float, rng) -> None:
    """Each qubit suffers X, Y or Z with probability p/3 each."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    xv = frame.vec(code.code_id, "X")
    zv = frame.vec(code.code_id, "Z")
    hit = rng.random(xv.shape[0]) < p
    kind = rng.integers(0, 3, xv.shape[0])
    xv ^= (hit & (kind != 2)).astype(np.uint8)
    zv ^= (hit & (kind != 0)).astype(np.uint8)


def flip_measurements(syndrome: Syndrome, p: float, rng) -> Syndrome:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    flips = (rng.random(syndrome.bits.shape[0]) < p).astype(np.uint8)
    return Syndrome(syndrome.family, syndrome.bits ^ flips)
