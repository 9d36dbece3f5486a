"""Monte Carlo experiments for single-shot magic-state preparation.

One trial prepares the logical |+> of all three codes from a single
noisy round of Z-check measurements, optionally applies the transversal
CCZ with depolarising noise before or after the gate, measures out the
bulk, and judges each surviving 2D code under perfect final decoding.

Every draw of a trial comes from one counter-based stream keyed by
(seed, lattice size, error rate, noise position, trial index). The CCZ
gate itself draws nothing, so toggling it replays the exact same noise;
X patterns of a gate-off run match the gate-on run everywhere, and the
Z frames first differ at the gate.
"""

from __future__ import annotations

import json
import subprocess
import weakref
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from cczsim import decoders, gf2
from cczsim.ccz import apply_transversal_ccz
from cczsim.jump import collapse, measure_out_inner, reconstruct_x_syndrome
from cczsim.lattice import CodeId, TriLattice, build_tri_lattice
from cczsim.noise import (AFTER_CCZ, BEFORE_CCZ, POSITIONS, NoiseConfig,
                          depolarise, flip_measurements, random_half_flips,
                          trial_rng)
from cczsim.pauli import (X_CHECKS, Z_CHECKS, tri_frame,
                          z_syndrome_of_x_errors)

CODE_LABELS = ("oct", "cub1", "cub2")
VARIANTS = ("noccz", "before", "after")
CSV_HEADER = "p,trials,fails_x,fails_z,pfail_x,err_x,pfail_z,err_z"

# the preparation decoder solves the repaired syndrome with flat priors:
# any syndrome-consistent X correction leaves the identical encoded
# state, so the cheapest consistent solution is exact, not approximate
PREP_PRIOR = 0.5


@dataclass(frozen=True)
class DecoderParams:
    max_bp_iters: int = 30
    osd_order: int = 0


DEFAULT_DECODER = DecoderParams()

_prep_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _prep_decoder(code, params: DecoderParams):
    per = _prep_cache.setdefault(code, {})
    key = (params.max_bp_iters, params.osd_order)
    if key not in per:
        check = decoders.SparseCheck.from_dense(code.hz, PREP_PRIOR)
        per[key] = decoders.Bposd(check, max_bp_iters=params.max_bp_iters,
                                  osd_order=params.osd_order)
    return per[key]


def _stream_id(L: int, p: float, position: str) -> int:
    return zlib.crc32(f"{L}|{p:.12g}|{position}".encode())


def _parity(a: np.ndarray, b: np.ndarray) -> int:
    return int((a & b).sum()) & 1


@dataclass(frozen=True)
class TrialOutcome:
    """Per-code logical verdicts of one trial, X and Z basis."""

    fail_x: tuple
    fail_z: tuple


def run_trial(tri: TriLattice, noise: NoiseConfig, trial: int,
              params: DecoderParams = DEFAULT_DECODER) -> TrialOutcome:
    rng = trial_rng(noise.seed, _stream_id(tri.L, noise.p, noise.position),
                    trial)
    frame = tri_frame(tri)

    for cid in CodeId:
        code = tri.code(cid)
        random_half_flips(code, frame, rng)
        measured = flip_measurements(z_syndrome_of_x_errors(code, frame),
                                     noise.p, rng)
        repaired = decoders.repair_measured_syndrome(code, measured)
        xv = frame.x_err[int(cid)]
        xv ^= _prep_decoder(code, params).decode(repaired.bits)
        # the solver picks an arbitrary coset representative; pin its
        # logical part to zero, which relabels the same encoded state
        if _parity(xv, code.logical_z):
            xv ^= code.logical_x

    if noise.position == BEFORE_CCZ:
        for cid in CodeId:
            depolarise(tri.code(cid), frame, noise.p, rng)
    if noise.ccz_enabled:
        apply_transversal_ccz(frame)
    if noise.position == AFTER_CCZ:
        for cid in CodeId:
            depolarise(tri.code(cid), frame, noise.p, rng)

    fail_x, fail_z = [], []
    for cid in CodeId:
        code = tri.code(cid)
        record = measure_out_inner(code, frame, rng)
        recon = reconstruct_x_syndrome(code, record)
        record.apply_correction(decoders.boundary_modified_decode(code, recon))
        out = collapse(code, frame, record, rng)
        twod = out.code

        sx = gf2.syndrome_packed(twod.hzp, gf2.pack_vec(out.x_err))
        cx = decoders.check_matcher(twod, Z_CHECKS).decode(np.flatnonzero(sx))
        sz = gf2.syndrome_packed(twod.hxp, gf2.pack_vec(out.z_err))
        cz = decoders.check_matcher(twod, X_CHECKS).decode(np.flatnonzero(sz))

        fail_x.append(_parity(out.x_err ^ cx, twod.logical_z) == 1)
        fail_z.append(_parity(out.z_err ^ cz, twod.logical_x) == 1)
    return TrialOutcome(tuple(fail_x), tuple(fail_z))


def cz_conversion_rate(tri: TriLattice, noise: NoiseConfig, trials: int,
                       params: DecoderParams = DEFAULT_DECODER) -> np.ndarray:
    """Per-code density of gate-written Z flips beyond the gauge baseline.

    Measurement-based preparation leaves each X frame a half-density
    random stabilizer element plus the physical residual error. The
    stabilizer part relabels the same state and the Z content the gate
    derives from it lands in the partner's Z-stabilizer group, so raw
    gate flips sit near 1/4 regardless of noise. Each trial therefore
    decodes the preparation syndrome twice, with and without readout
    flips, pinning the identical gauge in two frames; differencing the
    gate's Z writes between them cancels the gauge and leaves exactly
    the flips attributable to residual error. Draw for draw the noisy
    path matches run_trial, so the measured conversion is the one the
    full experiment experiences.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    total = np.zeros(3, dtype=np.float64)
    for trial in range(trials):
        rng = trial_rng(noise.seed,
                        _stream_id(tri.L, noise.p, noise.position), trial)
        frame = tri_frame(tri)
        ref = tri_frame(tri)
        for cid in CodeId:
            code = tri.code(cid)
            random_half_flips(code, frame, rng)
            ref.x_err[int(cid)][:] = frame.x_err[int(cid)]
            clean = z_syndrome_of_x_errors(code, frame)
            measured = flip_measurements(clean, noise.p, rng)
            repaired = decoders.repair_measured_syndrome(code, measured)
            dec = _prep_decoder(code, params)
            for fr, bits in ((frame, repaired.bits), (ref, clean.bits)):
                xv = fr.x_err[int(cid)]
                xv ^= dec.decode(bits)
                if _parity(xv, code.logical_z):
                    xv ^= code.logical_x
        if noise.position == BEFORE_CCZ:
            for cid in CodeId:
                depolarise(tri.code(cid), frame, noise.p, rng)
        # difference around the gate so pre-gate Z noise is not counted
        pre = [v.copy() for v in frame.z_err]
        apply_transversal_ccz(frame)
        apply_transversal_ccz(ref)
        for k in range(3):
            total[k] += float(
                (frame.z_err[k] ^ pre[k] ^ ref.z_err[k]).mean())
    return total / trials


# ---------------------------------------------------------------------------
# sweeps over (L, p) grids

@dataclass(frozen=True)
class ExperimentConfig:
    lattice_sizes: tuple
    error_rates: tuple
    trials: int
    noise_position: str = AFTER_CCZ
    ccz_enabled: bool = True
    seed: int = 0
    out_dir: str | None = None
    workers: int = 1
    decoder: DecoderParams = field(default_factory=DecoderParams)

    def __post_init__(self):
        sizes = tuple(int(L) for L in self.lattice_sizes)
        rates = tuple(float(p) for p in self.error_rates)
        object.__setattr__(self, "lattice_sizes", sizes)
        object.__setattr__(self, "error_rates", rates)
        if not sizes:
            raise ValueError("need at least one lattice size")
        for L in sizes:
            if L < 3 or L % 2 == 0:
                raise ValueError(f"lattice size {L} is not an odd int >= 3")
        if not rates:
            raise ValueError("need at least one error rate")
        for p in rates:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"error rate {p} outside [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if self.noise_position not in POSITIONS:
            raise ValueError(f"noise position must be one of {POSITIONS}")

    @property
    def variant(self) -> str:
        if not self.ccz_enabled:
            return "noccz"
        return "before" if self.noise_position == BEFORE_CCZ else "after"


@dataclass(frozen=True)
class DataRow:
    """Failure tallies of one (p, L) point, all codes side by side."""

    p: float
    trials: int
    fails_x: tuple
    fails_z: tuple

    def fails(self, code, basis: str) -> int:
        store = self.fails_x if basis == "x" else self.fails_z
        return store[_code_index(code)]

    def pfail(self, code, basis: str) -> float:
        return self.fails(code, basis) / self.trials

    def ci_half_width(self, code, basis: str, z: float = 1.96) -> float:
        return agresti_coull(self.fails(code, basis), self.trials, z)[1]


def _code_index(code) -> int:
    if isinstance(code, str):
        return CODE_LABELS.index(code)
    return int(code)


_lattices: dict = {}


def _lattice_for(L: int) -> TriLattice:
    tri = _lattices.get(L)
    if tri is None:
        tri = build_tri_lattice(L)
        _lattices[L] = tri
    return tri


def _chunk_counts(task):
    L, p, position, ccz, seed, params, lo, hi = task
    tri = _lattice_for(L)
    noise = NoiseConfig(p=p, position=position, ccz_enabled=ccz, seed=seed)
    kx = np.zeros(3, dtype=np.int64)
    kz = np.zeros(3, dtype=np.int64)
    for trial in range(lo, hi):
        out = run_trial(tri, noise, trial, params)
        kx += out.fail_x
        kz += out.fail_z
    return kx, kz


def run_point(tri: TriLattice, config: ExperimentConfig, p: float) -> DataRow:
    base = (tri.L, p, config.noise_position, config.ccz_enabled, config.seed,
            config.decoder)
    if config.workers == 1:
        _lattices.setdefault(tri.L, tri)
        kx, kz = _chunk_counts(base + (0, config.trials))
    else:
        edges = np.linspace(0, config.trials, config.workers + 1).astype(int)
        tasks = [base + (int(lo), int(hi))
                 for lo, hi in zip(edges[:-1], edges[1:]) if lo < hi]
        kx = np.zeros(3, dtype=np.int64)
        kz = np.zeros(3, dtype=np.int64)
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for cx, cz in pool.map(_chunk_counts, tasks):
                kx += cx
                kz += cz
    return DataRow(p=p, trials=config.trials,
                   fails_x=tuple(int(v) for v in kx),
                   fails_z=tuple(int(v) for v in kz))


def run_sweep(config: ExperimentConfig) -> dict:
    """Full (L, p) grid; returns rows per size and writes CSVs if asked."""
    out_dir = Path(config.out_dir) if config.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    for L in config.lattice_sizes:
        tri = _lattice_for(L)
        rows = [run_point(tri, config, p) for p in config.error_rates]
        results[L] = rows
        if out_dir is not None:
            write_tables(out_dir, config.variant, L, rows)
    if out_dir is not None:
        write_manifest(out_dir, config)
    return results


# ---------------------------------------------------------------------------
# data files

def csv_name(variant: str, label: str, L: int) -> str:
    return f"data_{variant}_{label}_L{L}.csv"


def write_tables(out_dir, variant: str, L: int, rows) -> list:
    paths = []
    for k, label in enumerate(CODE_LABELS):
        lines = [CSV_HEADER]
        for r in rows:
            kx, kz = r.fails_x[k], r.fails_z[k]
            ex = agresti_coull(kx, r.trials)[1]
            ez = agresti_coull(kz, r.trials)[1]
            lines.append(f"{r.p:.6g},{r.trials},{kx},{kz},"
                         f"{kx / r.trials:.6g},{ex:.6g},"
                         f"{kz / r.trials:.6g},{ez:.6g}")
        path = Path(out_dir) / csv_name(variant, label, L)
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def read_tables(in_dir, variant: str) -> dict:
    """Rebuild the per-size row tables from one variant's CSV files."""
    in_dir = Path(in_dir)
    sizes = set()
    for path in in_dir.glob(f"data_{variant}_*_L*.csv"):
        sizes.add(int(path.stem.rsplit("_L", 1)[1]))
    if not sizes:
        raise FileNotFoundError(f"no {variant!r} data files in {in_dir}")
    results = {}
    for L in sorted(sizes):
        cols = []
        for label in CODE_LABELS:
            path = in_dir / csv_name(variant, label, L)
            lines = path.read_text().strip().splitlines()
            if lines[0] != CSV_HEADER:
                raise ValueError(f"unexpected header in {path}")
            cols.append([line.split(",") for line in lines[1:]])
        rows = []
        for triple in zip(*cols):
            ps = {cells[0] for cells in triple}
            ns = {cells[1] for cells in triple}
            if len(ps) != 1 or len(ns) != 1:
                raise ValueError(f"misaligned rows across codes at L={L}")
            rows.append(DataRow(
                p=float(triple[0][0]), trials=int(triple[0][1]),
                fails_x=tuple(int(cells[2]) for cells in triple),
                fails_z=tuple(int(cells[3]) for cells in triple)))
        results[L] = rows
    return results


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def write_manifest(out_dir, config: ExperimentConfig) -> Path:
    payload = {
        "variant": config.variant,
        "lattice_sizes": list(config.lattice_sizes),
        "error_rates": list(config.error_rates),
        "trials": config.trials,
        "noise_position": config.noise_position,
        "ccz_enabled": config.ccz_enabled,
        "seed": config.seed,
        "workers": config.workers,
        "decoder": {"max_bp_iters": config.decoder.max_bp_iters,
                    "osd_order": config.decoder.osd_order,
                    "prep_prior": PREP_PRIOR},
        "code_version": _git_describe(),
        "csv_header": CSV_HEADER,
        "fit_window_policy":
            "fit rates within 30% of the coarse crossing estimate",
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# statistics

def agresti_coull(k: int, n: int, z: float = 1.96) -> tuple:
    """Binomial interval (centre, half width) with the z^2 pseudo-counts."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= k <= n:
        raise ValueError("k must lie in 0..n")
    if z < 0:
        raise ValueError("z must be non-negative")
    n_adj = n + z * z
    centre = (k + z * z / 2.0) / n_adj
    half = z * np.sqrt(centre * (1.0 - centre) / n_adj)
    return float(centre), float(half)


@dataclass(frozen=True)
class FitResult:
    pth: float
    nu: float
    a0: float
    a1: float
    a2: float
    pth_error: float
    degenerate: bool = False


def _flatten(table, code, basis: str):
    k = _code_index(code)
    if basis not in ("x", "z"):
        raise ValueError("basis must be 'x' or 'z'")
    Ls, ps, pf, w, ns = [], [], [], [], []
    for L in sorted(table):
        for row in table[L]:
            fails = (row.fails_x if basis == "x" else row.fails_z)[k]
            Ls.append(L)
            ps.append(row.p)
            pf.append(fails / row.trials)
            w.append(agresti_coull(fails, row.trials)[1])
            ns.append(row.trials)
    return (np.array(Ls, dtype=np.float64), np.array(ps), np.array(pf),
            np.array(w), np.array(ns, dtype=np.int64))


def _coarse_crossing(Ls, ps, pf) -> float:
    sizes = np.unique(Ls)
    crossings = []
    for i in range(len(sizes) - 1):
        a, b = sizes[i], sizes[i + 1]
        sel_a, sel_b = Ls == a, Ls == b
        grid = np.unique(np.concatenate([ps[sel_a], ps[sel_b]]))
        fa = np.interp(grid, ps[sel_a], pf[sel_a])
        fb = np.interp(grid, ps[sel_b], pf[sel_b])
        diff = fa - fb
        for j in range(len(grid) - 1):
            if diff[j] == 0:
                crossings.append(grid[j])
            elif diff[j] * diff[j + 1] < 0:
                t = diff[j] / (diff[j] - diff[j + 1])
                crossings.append(grid[j] + t * (grid[j + 1] - grid[j]))
    if crossings:
        return float(np.median(crossings))
    return float(np.median(ps))


def _scaling_residuals(theta, Ls, ps, pf, w):
    a0, a1, a2, pth, nu = theta
    x = (ps - pth) * Ls ** (1.0 / nu)
    return (a0 + a1 * x + a2 * x * x - pf) / w


def fit_threshold(table, code, basis: str, n_boot: int = 500,
                  seed: int = 0) -> FitResult:
    """Crossing-point fit of pfail(p, L) to a quadratic scaling ansatz.

    The failure rate is modelled as a function of (p - pth) L^(1/nu).
    Bootstrap resampling of the per-point binomial counts gives the
    quoted threshold error. Tables without any L dependence carry no
    crossing information and come back flagged degenerate with no error
    bar instead of a fake one.
    """
    if n_boot < 200:
        raise ValueError("bootstrap needs at least 200 resamples")
    Ls, ps, pf, w, ns = _flatten(table, code, basis)
    if len(np.unique(Ls)) < 2 or len(np.unique(ps)) < 3:
        raise ValueError("fit needs at least two sizes and three rates")

    p_lo, p_hi = float(ps.min()), float(ps.max())
    theta0 = np.array([float(np.median(pf)), 1.0, 0.0,
                       _coarse_crossing(Ls, ps, pf), 1.0])
    lo = np.array([-np.inf, -np.inf, -np.inf, p_lo, 0.2])
    hi = np.array([np.inf, np.inf, np.inf, p_hi, 10.0])
    theta0[3] = np.clip(theta0[3], p_lo, p_hi)

    res = least_squares(_scaling_residuals, theta0, bounds=(lo, hi),
                        args=(Ls, ps, pf, w), max_nfev=5000)
    if not res.success:
        raise RuntimeError("threshold fit did not converge")
    sse_full = float(np.sum(res.fun ** 2))

    # nested comparison: a quadratic in p alone ignores L entirely
    vand = np.stack([np.ones_like(ps), ps, ps * ps], axis=1) / w[:, None]
    coef, *_ = np.linalg.lstsq(vand, pf / w, rcond=None)
    sse_flat = float(np.sum((vand @ coef - pf / w) ** 2))
    if sse_full >= 0.95 * sse_flat:
        a0, a1, a2, pth, nu = res.x
        return FitResult(float(pth), float(nu), float(a0), float(a1),
                         float(a2), float("nan"), degenerate=True)

    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n_boot):
        kb = rng.binomial(ns, pf)
        try:
            boot = least_squares(_scaling_residuals, res.x,
                                 bounds=(lo, hi), args=(Ls, ps, kb / ns, w),
                                 max_nfev=5000)
        except Exception:
            continue
        if boot.success:
            samples.append(boot.x[3])
    if len(samples) < n_boot // 2:
        raise RuntimeError("bootstrap refits mostly failed")
    a0, a1, a2, pth, nu = res.x
    return FitResult(float(pth), float(nu), float(a0), float(a1), float(a2),
                     float(np.std(samples, ddof=1)), degenerate=False)


def select_fit_window(table, code, basis: str) -> tuple:
    """Restrict a row table to rates near the coarse crossing estimate.

    Returns (filtered table, (lo, hi)). The filter only applies when it
    keeps at least three distinct rates; narrow grids pass unchanged.
    """
    Ls, ps, pf, _, _ = _flatten(table, code, basis)
    est = _coarse_crossing(Ls, ps, pf)
    lo, hi = 0.7 * est, 1.3 * est
    kept = {L: [row for row in rows if lo <= row.p <= hi]
            for L, rows in table.items()}
    n_rates = len({row.p for rows in kept.values() for row in rows})
    if n_rates < 3 or any(not rows for rows in kept.values()):
        return dict(table), (lo, hi)
    return kept, (lo, hi)


@dataclass(frozen=True)
class EffectiveRateReport:
    """Pairwise conversion-corrected threshold shifts.

    delta_p maps (L1, L2) with L1 < L2 to the shift the measured
    conversion fractions imply; shift_positive marks pairs whose slope
    and conversion ratios make the shift provably positive. pth_true is
    the conservative corrected threshold.
    """

    delta_p: dict
    shift_positive: dict
    pth_true: float


def effective_rate_diagnostics(pth_iid: float, slopes, conversions
                               ) -> EffectiveRateReport:
    sizes = sorted(slopes)
    if sorted(conversions) != sizes:
        raise ValueError("slopes and conversions must cover the same sizes")
    if len(sizes) < 2:
        raise ValueError("need at least two sizes")
    for L in sizes:
        if slopes[L] <= 0:
            raise ValueError("slopes must be positive")
        if conversions[L] < 0:
            raise ValueError("conversion fractions cannot be negative")
    delta, positive = {}, {}
    for i in range(len(sizes)):
        for j in range(i + 1, len(sizes)):
            l1, l2 = sizes[i], sizes[j]
            m1, m2 = slopes[l1], slopes[l2]
            q1, q2 = conversions[l1], conversions[l2]
            if m1 == m2:
                raise ValueError(
                    f"equal slopes at L={l1} and L={l2} leave the shift "
                    "undetermined")
            delta[(l1, l2)] = (m2 * q2 - m1 * q1) / (m1 - m2)
            positive[(l1, l2)] = m2 * q2 < m1 * q1
    pth_true = pth_iid + min(delta.values())
    return EffectiveRateReport(delta_p=delta, shift_positive=positive,
                               pth_true=pth_true)
