"""Command line front end: simulate, fit, oracle, plot."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from cczsim import experiment
from cczsim.ccz import face_patch, sample_projection
from cczsim.lattice import CodeId, build_tri_lattice
from cczsim.noise import AFTER_CCZ, BEFORE_CCZ


def _sizes(text: str) -> tuple:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _rates(text: str) -> tuple:
    """Either a comma list or lo:hi:count for an even grid."""
    if ":" in text:
        lo, hi, count = text.split(":")
        return tuple(float(p) for p in np.linspace(float(lo), float(hi),
                                                   int(count)))
    return tuple(float(tok) for tok in text.split(",") if tok)


def _membranes(tri, text: str):
    """code:kind:x,y,z:x,y,z membranes separated by semicolons.

    Kinds are qx/qy/qz for oct and xy/xz/yz for the cub codes; the two
    triples bound face anchors in doubled coordinates, inclusive.
    """
    specs = []
    for part in text.split(";"):
        fields = part.strip().split(":")
        if len(fields) != 4:
            raise argparse.ArgumentTypeError(
                f"membrane {part!r} is not code:kind:lo:hi")
        label, kind, lo, hi = fields
        if label not in experiment.CODE_LABELS:
            raise argparse.ArgumentTypeError(f"unknown code {label!r}")
        code_id = CodeId(experiment.CODE_LABELS.index(label))
        lo = tuple(int(v) for v in lo.split(","))
        hi = tuple(int(v) for v in hi.split(","))
        if len(lo) != 3 or len(hi) != 3:
            raise argparse.ArgumentTypeError("membrane corners need 3 ints")
        specs.append(face_patch(tri, code_id, kind, lo, hi))
    return specs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cczsim",
        description="Monte Carlo magic-state preparation on three 3D codes")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an (L, p) sweep and write CSVs")
    sim.add_argument("--lattice-sizes", type=_sizes, required=True,
                     metavar="L1,L2,...")
    sim.add_argument("--error-rates", type=_rates, required=True,
                     metavar="LO:HI:N or p1,p2,...")
    sim.add_argument("--trials", type=int, required=True)
    sim.add_argument("--noise-position", choices=("before", "after"),
                     default="after")
    sim.add_argument("--ccz", choices=("on", "off"), default="on")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", required=True, metavar="DIR")
    sim.add_argument("--max-bp-iters", type=int, default=30)
    sim.add_argument("--osd-order", type=int, default=0)

    fit = sub.add_parser("fit", help="threshold fit from written CSVs")
    fit.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    fit.add_argument("--code", choices=experiment.CODE_LABELS, required=True)
    fit.add_argument("--basis", choices=("x", "z"), required=True)
    fit.add_argument("--variant", choices=experiment.VARIANTS, default=None,
                     help="required only when DIR holds several variants")
    fit.add_argument("--bootstrap", type=int, default=500)

    orc = sub.add_parser("oracle",
                         help="projection statistics for planted membranes")
    orc.add_argument("--membranes", required=True,
                     metavar="code:kind:x,y,z:x,y,z;...")
    orc.add_argument("--samples", type=int, required=True)
    orc.add_argument("--lattice-size", type=int, default=7)
    orc.add_argument("--seed", type=int, default=0)

    plot = sub.add_parser("plot", help="failure-rate curves from CSVs")
    plot.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    plot.add_argument("--out", required=True, metavar="FILE.svg")
    plot.add_argument("--variant", choices=experiment.VARIANTS, default=None)
    return parser


def _pick_variant(in_dir, requested):
    from pathlib import Path
    present = sorted({path.stem.split("_")[1]
                      for path in Path(in_dir).glob("data_*_L*.csv")})
    if requested is not None:
        if requested not in present:
            raise SystemExit(f"no {requested!r} data in {in_dir}")
        return requested
    if len(present) == 1:
        return present[0]
    if not present:
        raise SystemExit(f"no data files in {in_dir}")
    raise SystemExit(f"several variants in {in_dir} ({', '.join(present)}); "
                     "pass --variant")


def _cmd_simulate(args) -> int:
    position = BEFORE_CCZ if args.noise_position == "before" else AFTER_CCZ
    config = experiment.ExperimentConfig(
        lattice_sizes=args.lattice_sizes, error_rates=args.error_rates,
        trials=args.trials, noise_position=position,
        ccz_enabled=args.ccz == "on", seed=args.seed, out_dir=args.out,
        workers=args.workers,
        decoder=experiment.DecoderParams(max_bp_iters=args.max_bp_iters,
                                         osd_order=args.osd_order))
    results = experiment.run_sweep(config)
    for L, rows in results.items():
        for row in rows:
            cells = " ".join(
                f"{label}:{row.pfail(k, 'z'):.4f}"
                for k, label in enumerate(experiment.CODE_LABELS))
            print(f"L={L} p={row.p:.6g} trials={row.trials} pfail_z {cells}")
    print(f"wrote {config.variant} tables to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    variant = _pick_variant(args.in_dir, args.variant)
    table = experiment.read_tables(args.in_dir, variant)
    windowed, (lo, hi) = experiment.select_fit_window(table, args.code,
                                                      args.basis)
    result = experiment.fit_threshold(windowed, args.code, args.basis,
                                      n_boot=args.bootstrap)
    print(f"variant {variant}, code {args.code}, basis {args.basis}")
    print(f"fit window [{lo:.6g}, {hi:.6g}]")
    if result.degenerate:
        print("fit is degenerate: the table shows no size dependence")
    print(f"pth = {result.pth:.6g} +- {result.pth_error:.2g}")
    print(f"nu = {result.nu:.4g}")
    print(f"coeffs a0={result.a0:.4g} a1={result.a1:.4g} a2={result.a2:.4g}")
    return 0


def _cmd_oracle(args) -> int:
    tri = build_tri_lattice(args.lattice_size)
    specs = _membranes(tri, args.membranes)
    rng = np.random.default_rng(args.seed)
    stats = sample_projection(tri, specs, args.samples, rng)
    for cid in CodeId:
        freq = stats.flip_freq(cid)
        flipped = np.flatnonzero(stats.flip_counts[int(cid)])
        label = experiment.CODE_LABELS[int(cid)]
        print(f"{label}: {flipped.size} of {freq.size} cells ever flip")
        if flipped.size:
            lo, hi = freq[flipped].min(), freq[flipped].max()
            print(f"  flip frequency range [{lo:.4f}, {hi:.4f}]")
    for spec, odd in zip(stats.membranes, stats.boundary_odd):
        label = experiment.CODE_LABELS[int(spec.code)]
        for cid, count in odd.items():
            other = experiment.CODE_LABELS[int(cid)]
            print(f"membrane on {label}: boundary parity in {other} odd in "
                  f"{count}/{stats.n_samples} samples")
    return 0


def _cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    variant = _pick_variant(args.in_dir, args.variant)
    table = experiment.read_tables(args.in_dir, variant)
    fig, axes = plt.subplots(2, 3, figsize=(13, 7), sharex=True)
    for k, label in enumerate(experiment.CODE_LABELS):
        for row_i, basis in enumerate(("x", "z")):
            ax = axes[row_i][k]
            for L in sorted(table):
                ps = [row.p for row in table[L]]
                pf = [row.pfail(k, basis) for row in table[L]]
                err = [row.ci_half_width(k, basis) for row in table[L]]
                ax.errorbar(ps, pf, yerr=err, marker="o", ms=3, lw=1,
                            capsize=2, label=f"L={L}")
            ax.set_yscale("log")
            ax.set_title(f"{label}, {basis.upper()} basis")
            ax.grid(True, which="both", alpha=0.3)
            if row_i == 1:
                ax.set_xlabel("p")
            if k == 0:
                ax.set_ylabel("logical failure rate")
    axes[0][0].legend(fontsize=8)
    fig.suptitle(f"variant {variant}")
    fig.tight_layout()
    fig.savefig(args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "fit": _cmd_fit,
                "oracle": _cmd_oracle, "plot": _cmd_plot}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
