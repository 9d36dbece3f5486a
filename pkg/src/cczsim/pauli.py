"""Pauli frame tracking and GF(2) syndrome extraction.

A frame stores X and Z error indicator vectors for each of the three
stacked codes. Y errors set both bits. Vector lengths follow each
code's qubit count, so the same type serves the 3D stack (all three
share one site table) and the collapsed 2D codes (different sizes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .lattice import CodeId

Z_CHECKS = "Zchecks"
X_CHECKS = "Xchecks"


@dataclass
class Syndrome:
    family: str
    bits: np.ndarray

    def copy(self) -> "Syndrome":
        return Syndrome(self.family, self.bits.copy())

    def __post_init__(self):
        if self.family not in (Z_CHECKS, X_CHECKS):
            raise ValueError(f"unknown check family {self.family!r}")
        self.bits = np.asarray(self.bits, dtype=np.uint8)


@dataclass
class PauliFrame:
    x_err: list
    z_err: list

    @classmethod
    def zeros(cls, sizes) -> "PauliFrame":
        return cls([np.zeros(n, dtype=np.uint8) for n in sizes],
                   [np.zeros(n, dtype=np.uint8) for n in sizes])

    def copy(self) -> "PauliFrame":
        return PauliFrame([v.copy() for v in self.x_err],
                          [v.copy() for v in self.z_err])

    def vec(self, code_id, basis: str) -> np.ndarray:
        store = self.x_err if basis == "X" else self.z_err
        return store[int(code_id)]


def _checked(code, vec: np.ndarray) -> np.ndarray:
    if vec.shape[0] != code.n:
        raise ValueError(f"frame vector length {vec.shape[0]} != {code.n}")
    return vec


def z_syndrome_of_x_errors(code, frame: PauliFrame) -> Syndrome:
    vec = _checked(code, frame.vec(code.code_id, "X"))
    return Syndrome(Z_CHECKS, gf2.syndrome_packed(code.hzp, gf2.pack_vec(vec)))


def x_syndrome_of_z_errors(code, frame: PauliFrame) -> Syndrome:
    vec = _checked(code, frame.vec(code.code_id, "Z"))
    return Syndrome(X_CHECKS, gf2.syndrome_packed(code.hxp, gf2.pack_vec(vec)))


def commutes_with_logical(code, frame: PauliFrame, basis: str) -> bool:
    """Whether the frame's error component acts trivially on the coded
    qubit in the given basis.

    Overlap parity with the opposing logical representative is only
    representative independent for syndrome-free errors, so a noisy
    frame must be decoded before asking.
    """
    if basis == "Z":
        err = _checked(code, frame.vec(code.code_id, "Z"))
        if ((code.hx @ err) % 2).any():
            raise ValueError("Z component carries syndrome; decode first")
        return int(err @ code.logical_x) % 2 == 0
    if basis == "X":
        err = _checked(code, frame.vec(code.code_id, "X"))
        if ((code.hz @ err) % 2).any():
            raise ValueError("X component carries syndrome; decode first")
        return int(err @ code.logical_z) % 2 == 0
    raise ValueError(f"basis must be 'X' or 'Z', got {basis!r}")


def tri_frame(tri) -> PauliFrame:
    return PauliFrame.zeros([tri.n] * len(CodeId))
