"""Monte Carlo toolkit for transversal-CCZ Clifford errors on three
overlapping 3D surface codes.

The package is organised around the lifecycle of a magic-state
preparation trial:

- ``lattice``: the rectified cubic lattice, the three CSS codes sharing
  its sites, and their collapse partitions.
- ``pauli``: dense X/Z frame bookkeeping and syndrome extraction.
- ``noise``: the error channels applied during a trial.
- ``ccz``: the transversal CCZ error rule, Monte Carlo projection
  oracle, and membrane failure predicates.
- ``decoders``: exact minimum-weight matching, BP-OSD, metacheck repair
  and the boundary-modified cell decoder.
- ``jump``: single-qubit measure-out, syndrome reconstruction, the
  sweep rules and the dimension collapse to the 2D codes.
- ``experiment``: trial orchestration, sweeps, statistics, threshold
  fits and file formats.
"""

from cczsim.lattice import CodeId, TriLattice, build_tri_lattice

__all__ = ["CodeId", "TriLattice", "build_tri_lattice"]

__version__ = "0.1.0"
