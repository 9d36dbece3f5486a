"""Dimension jump: measure out the 3D bulk, keep a 2D code on one boundary.

Measuring every bulk qubit in the X basis projects the prepared state
onto a random Z-stabiliser pattern. The recorded outcomes are first
repaired against the reconstructed X-cell syndrome, then a layer-by-layer
sweep infers which stabiliser pattern was projected and returns its
restriction to the surviving boundary qubits as a Z correction. Wrong
but consistent inferences differ from the truth only by stabilisers of
the surviving 2D code.
"""

import weakref
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from cczsim import gf2
from cczsim.lattice import CodeId
from cczsim.pauli import Syndrome, X_CHECKS


@dataclass
class MeasurementRecord:
    """Single-qubit X-basis outcomes for the measured-out qubits.

    Bit 1 encodes a -1 outcome. Entries for qubits that stay on the
    collapse boundary are fixed at 0; they are never measured here.
    ``byproduct`` is the Z pattern the projection leaves on the boundary
    qubits; the simulator needs it to update the surviving frame, but no
    decoding step may look at it.
    """

    outcomes: np.ndarray
    byproduct: np.ndarray
    corrected: bool = False

    def apply_correction(self, support: np.ndarray) -> None:
        self.outcomes ^= support.astype(np.uint8)
        self.corrected = True


def measure_out_inner(code, frame, rng) -> MeasurementRecord:
    """Measure every interior qubit in the X basis.

    The projection picks a uniform element of the Z-stabiliser group;
    its interior restriction is the recorded outcome pattern (a random
    logical outcome is included, since the logical has representatives
    on both sides of the collapse boundary) and its boundary restriction
    is the byproduct left on the surviving qubits. Interior Z errors in
    the frame flip the corresponding recorded outcomes.
    """
    m = code.hz.shape[0]
    mask = rng.integers(0, 2, size=m, dtype=np.uint8).astype(bool)
    pattern = gf2.unpack_vec(gf2.xor_rows(code.hzp, mask), code.n)
    bits = (pattern ^ frame.vec(code.code_id, "Z")) & code.inner_mask
    byproduct = pattern & code.outer_mask
    return MeasurementRecord(bits.astype(np.uint8), byproduct.astype(np.uint8))


def reconstruct_x_syndrome(code, record: MeasurementRecord) -> Syndrome:
    """X-cell syndrome implied by the recorded outcomes.

    Cells that lose qubits to the collapse boundary contribute only the
    parity of their measured members; the surviving qubits are assumed
    to report +1.
    """
    if record.outcomes.shape != (code.n,):
        raise ValueError("record length does not match the code")
    bits = gf2.syndrome_packed(code.hxp, gf2.pack_vec(record.outcomes))
    return Syndrome(X_CHECKS, bits)


# ---------------------------------------------------------------------------
# sweep plans

_NO_NEIGHBOUR = -1


@dataclass(eq=False)
class _SweepPlan:
    cptr: np.ndarray           # cluster boundaries over entries
    eqw: np.ndarray            # per entry: site word index
    eqs: np.ndarray            # per entry: site bit shift
    er: np.ndarray             # (E, 2) candidate generator rows, -1 pad
    enw: np.ndarray            # (E, 2) neighbour word index, -1 = none
    ens: np.ndarray            # (E, 2) neighbour bit shift
    n_entries: int = field(init=False)

    def __post_init__(self):
        self.n_entries = int(self.eqw.size)


def _walk_cluster(qs, rs, hz):
    """Order a quadruple cluster along its site cycle.

    Yields (site, rows, neighbour-per-row); boundary clusters degrade to
    paths or lone sites and keep the same neighbour semantics.
    """
    qs = [int(q) for q in qs]
    rows_at = {q: [] for q in qs}
    other = {}
    for r in rs:
        r = int(r)
        cov = [q for q in qs if hz[r, q]]
        for q in cov:
            rows_at[q].append(r)
            mate = [p for p in cov if p != q]
            other[(q, r)] = mate[0] if mate else _NO_NEIGHBOUR
    nbrs = {q: sorted({other[(q, r)] for r in rows_at[q]} - {_NO_NEIGHBOUR})
            for q in qs}

    seen = set()
    order = []
    for q0 in sorted(qs):
        if q0 in seen:
            continue
        comp = [q0]
        seen.add(q0)
        i = 0
        while i < len(comp):
            for p in nbrs[comp[i]]:
                if p not in seen:
                    seen.add(p)
                    comp.append(p)
            i += 1
        ends = [q for q in comp if len(nbrs[q]) < 2]
        cur = min(ends) if ends else min(comp)
        prev = _NO_NEIGHBOUR
        visited = set()
        while cur not in visited:
            visited.add(cur)
            order.append(cur)
            nxt = [p for p in nbrs[cur] if p != prev and p not in visited]
            if not nxt:
                break
            # two ways around a cycle start; the lighter generator wins
            if len(nxt) > 1:
                nxt.sort(key=lambda p: min(r for r in rows_at[cur]
                                           if other[(cur, r)] == p))
            prev, cur = cur, nxt[0]

    for q in order:
        rows = sorted(rows_at[q])[:2]
        yield q, rows, [other[(q, r)] for r in rows]


def _build_plan(code) -> _SweepPlan:
    hz = code.hz
    cptr = [0]
    sites, rows, nbrs = [], [], []

    def push(q, rr, nn):
        sites.append(q)
        rows.append((rr + [-1, -1])[:2])
        nbrs.append((nn + [_NO_NEIGHBOUR, _NO_NEIGHBOUR])[:2])

    for layer in code.sweep_layers:
        for qs, rs in zip(layer.cluster_sites, layer.cluster_rows):
            if len(qs) == 1:
                rr = sorted(int(r) for r in rs)[:2]
                push(int(qs[0]), rr, [_NO_NEIGHBOUR] * len(rr))
            else:
                for q, rr, nn in _walk_cluster(qs, rs, hz):
                    push(q, rr, nn)
            cptr.append(len(sites))

    sites = np.asarray(sites, dtype=np.int64)
    nb = np.asarray(nbrs, dtype=np.int64)
    enw = np.where(nb >= 0, nb >> 6, np.int64(-1))
    ens = np.where(nb >= 0, nb & 63, 0).astype(np.uint64)
    return _SweepPlan(
        cptr=np.asarray(cptr, dtype=np.int64),
        eqw=sites >> 6,
        eqs=(sites & 63).astype(np.uint64),
        er=np.asarray(rows, dtype=np.int64),
        enw=enw,
        ens=ens,
    )


_plans = weakref.WeakKeyDictionary()


def _plan_for(code) -> _SweepPlan:
    plan = _plans.get(code)
    if plan is None:
        plan = _build_plan(code)
        _plans[code] = plan
    return plan


@njit(cache=True)
def _sweep_kernel(work, hzp, cptr, eqw, eqs, er, enw, ens, coins):
    one = np.uint64(1)
    zero = np.uint64(0)
    nw = hzp.shape[1]
    for c in range(cptr.size - 1):
        for e in range(cptr[c], cptr[c + 1]):
            if (work[eqw[e]] >> eqs[e]) & one == zero:
                continue
            r0 = er[e, 0]
            r1 = er[e, 1]
            if r1 < 0:
                r = r0
            else:
                b0 = False
                if enw[e, 0] >= 0:
                    b0 = ((work[enw[e, 0]] >> ens[e, 0]) & one) != zero
                b1 = False
                if enw[e, 1] >= 0:
                    b1 = ((work[enw[e, 1]] >> ens[e, 1]) & one) != zero
                if b0 and not b1:
                    r = r0
                elif b1 and not b0:
                    r = r1
                elif coins[e]:
                    r = r0
                else:
                    r = r1
            for w in range(nw):
                work[w] ^= hzp[r, w]


def _run_sweep(code, record: MeasurementRecord, coins) -> np.ndarray:
    if not record.corrected:
        raise ValueError("record must be repaired before sweeping")
    plan = _plan_for(code)
    work = gf2.pack_vec(record.outcomes)
    _sweep_kernel(work, code.hzp, plan.cptr, plan.eqw, plan.eqs,
                  plan.er, plan.enw, plan.ens, coins)
    corr = gf2.unpack_vec(work, code.n)
    corr &= code.outer_mask
    return corr.astype(np.uint8)


def octahedral_sweep(code, record: MeasurementRecord) -> np.ndarray:
    """Deterministic sweep for the octahedral code.

    Integer layers are processed away from the collapse boundary; every
    -1 outcome names the unique square generator extending forward, so
    no random choices arise.
    """
    if code.code_id is not CodeId.OCT:
        raise ValueError("octahedral sweep needs the octahedral code")
    plan = _plan_for(code)
    coins = np.zeros(plan.n_entries, dtype=np.uint8)
    return _run_sweep(code, record, coins)


def cuboctahedral_quads(code, record: MeasurementRecord, rng) -> np.ndarray:
    """Randomised sweep for a cuboctahedral code.

    Dangling-edge layers pick one of up to two matching generators at
    random. Quadruple layers walk each four-site cycle: a -1 site whose
    cycle neighbours show exactly one -1 takes the generator shared with
    that neighbour, otherwise one of its two generators is chosen at
    random. Either resolution of a tie differs only by stabilisers of
    the final 2D code.
    """
    if code.code_id is CodeId.OCT:
        raise ValueError("quadruple sweep needs a cuboctahedral code")
    plan = _plan_for(code)
    coins = rng.integers(0, 2, size=plan.n_entries, dtype=np.uint8)
    return _run_sweep(code, record, coins)


@dataclass
class CollapsedCode:
    """A surviving 2D boundary code with its accumulated Pauli frame."""

    code: object
    x_err: np.ndarray
    z_err: np.ndarray


def collapse(code, frame, record: MeasurementRecord, rng) -> CollapsedCode:
    """Restrict the frame to the collapse boundary and fix the projection.

    The projection byproduct and the sweep correction for the inferred
    stabiliser pattern are XORed into the surviving Z frame; X errors on
    the boundary carry over untouched.
    """
    if code.code_id is CodeId.OCT:
        corr = octahedral_sweep(code, record)
    else:
        corr = cuboctahedral_quads(code, record, rng)
    sites = code.twod.sites
    z3 = frame.vec(code.code_id, "Z") ^ corr ^ record.byproduct
    x3 = frame.vec(code.code_id, "X")
    return CollapsedCode(code.twod, x3[sites].astype(np.uint8),
                         z3[sites].astype(np.uint8))
