"""Command-line interface.

Subcommands
-----------
sweep         evolve sequences over a J*tau grid, write samples + aggregates
fit           fit log-log slopes from an aggregates file
predict       print the closed-form suppression orders for one (N1, N2)
compare       fit a sweep and check every cell against the closed forms
intermediate  checkpoint-resolved errors for one QDD cell
plot          render aggregates/intermediate CSVs as SVG log-log panels

Exit codes: 0 success, 2 usage error, 3 exponent mismatch (compare),
4 precision exhausted (raise --digits).

Output determinism: given identical flags, seed and digits, the CSV files
are byte-identical regardless of --threads; manifest.json additionally
carries wall-clock timestamps and is the only non-reproducible artifact.
All numeric values are printed with 25 significant digits so high-precision
results survive a round trip through the files.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

from . import __version__
from .errors import PrecisionExhausted, QddError
from .scaling import (SweepConfig, aggregate_intermediate, fit_exponent,
                      predicted_exponents, realization_seed, run_intermediate,
                      run_sweep)
from .sequence import parse as parse_seq

SAMPLES_HEADER = ["n1", "n2", "log10_jtau", "realization",
                  "e_x", "e_y", "e_z", "d", "norm_kind", "digits"]
AGGREGATES_HEADER = ["n1", "n2", "log10_jtau", "norm_kind", "mu", "mean",
                     "stderr", "log10_mean", "log10_stderr",
                     "realizations", "digits"]
FITS_HEADER = ["n1", "n2", "norm_kind", "mu", "slope_raw", "n_hat",
               "intercept", "window_lo", "window_hi", "r2", "stderr",
               "n_points", "flagged"]
INTERMEDIATE_HEADER = ["n1", "n2", "log10_jtau", "j", "mu", "norm_kind",
                       "mean_error", "stderr", "realizations", "digits"]

_NORM_FLAG = {"nuclear": ("nuclear",), "hs": ("hilbert_schmidt",),
              "both": ("nuclear", "hilbert_schmidt")}


def _g(x: float) -> str:
    return f"{x:.10g}"


def _e(x: float) -> str:
    if not math.isfinite(x):
        return str(x)
    return f"{x:.17e}"


def _default_threads() -> int:
    env = os.environ.get("QDDLAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _grid_from_flags(args) -> tuple:
    lo, hi, step = args.jtau_log_min, args.jtau_log_max, args.jtau_log_step
    if hi < lo or step <= 0:
        raise SystemExit2("invalid J*tau grid flags")
    grid = []
    k = 0
    while True:
        v = lo + k * step
        if v > hi + 1e-9:
            break
        grid.append(round(v, 12))
        k += 1
    return tuple(grid)


class SystemExit2(SystemExit):
    def __init__(self, message):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(2)


def _int_list(text: str):
    try:
        return tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise SystemExit2(f"expected a list of integers, got {text!r}")


def _config_from_flags(args) -> SweepConfig:
    norm_kinds = _NORM_FLAG[args.norm]
    digits = args.digits if args.digits == "auto" else int(args.digits)
    common = dict(log_jtau_grid=_grid_from_flags(args),
                  realizations=args.realizations, seed=args.seed,
                  j_coupling=args.j, beta=args.beta, digits=digits,
                  norm_kinds=norm_kinds)
    if args.n1 or args.n2:
        if not (args.n1 and args.n2):
            raise SystemExit2("--n1 and --n2 must be given together")
        return SweepConfig(kind="qdd", n1_list=_int_list(args.n1),
                           n2_list=_int_list(args.n2), **common)
    if not args.seq:
        raise SystemExit2("give --seq or --n1/--n2")
    text = args.seq.strip()
    if text.upper() == "FREE":
        return SweepConfig(kind="free", **common)
    try:
        spec = parse_seq(text)
    except QddError as exc:
        raise SystemExit2(f"bad --seq: {exc}")
    if spec.depth == 1:
        lv = spec.levels[0]
        return SweepConfig(kind="udd", n1_list=(lv.order,), axis=lv.axis, **common)
    if spec.depth == 2 and spec.levels[0].axis == "Z":
        return SweepConfig(kind="qdd", n1_list=(spec.levels[0].order,),
                           n2_list=(spec.levels[1].order,), **common)
    raise SystemExit2("sweep supports FREE, UDD, and depth-2 sequences with "
                      "an inner Z level; deeper nests are library-only")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_manifest(path, command, config: SweepConfig, digits, extra=None):
    doc = {
        "tool": "qddlab",
        "version": __version__,
        "command": command,
        "config": {
            "kind": config.kind,
            "n1_list": list(config.n1_list),
            "n2_list": list(config.n2_list),
            "axis": config.axis,
            "log_jtau_grid": list(config.log_jtau_grid),
            "realizations": config.realizations,
            "seed": config.seed,
            "j_coupling": config.j_coupling,
            "beta": config.beta,
            "digits": config.digits,
            "norm_kinds": list(config.norm_kinds),
            "n_bath_qubits": config.n_bath_qubits,
        },
        "digits_used": digits,
        "digits_per_cell": {f"{a},{b}": digits for (a, b) in config.cells()},
        "realization_seeds": {str(r): realization_seed(config.seed, r)
                              for r in range(config.realizations)},
        "determinism": "CSV bytes are a pure function of config and digits; "
                       "timestamps below are informational only",
        "started_utc": extra.get("started") if extra else None,
        "finished_utc": extra.get("finished") if extra else None,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _utc() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


# --- subcommands ------------------------------------------------------------------


def cmd_sweep(args) -> int:
    config = _config_from_flags(args)
    os.makedirs(args.out, exist_ok=True)
    started = _utc()
    sweep = run_sweep(config, threads=args.threads)
    rows = [[s.n1, s.n2, _g(s.log10_jtau), s.realization,
             s.e_x, s.e_y, s.e_z, s.d, s.norm_kind, s.digits]
            for s in sweep.samples]
    _write_csv(os.path.join(args.out, "samples.csv"), SAMPLES_HEADER, rows)

    agg_rows = []
    for (n1, n2, ljt, norm_kind), entry in sweep.aggregates().items():
        for mu in ("x", "y", "z", "D"):
            mean, stderr = entry[mu]
            lmean = math.log10(mean) if mean > 0 else -math.inf
            lerr = stderr / (mean * math.log(10)) if mean > 0 else 0.0
            agg_rows.append([n1, n2, _g(ljt), norm_kind, mu, _e(mean),
                             _e(stderr), _e(lmean), _e(lerr),
                             config.realizations, sweep.digits])
    _write_csv(os.path.join(args.out, "aggregates.csv"), AGGREGATES_HEADER, agg_rows)
    _write_manifest(os.path.join(args.out, "manifest.json"), "sweep", config,
                    sweep.digits, {"started": started, "finished": _utc()})
    print(f"wrote {len(rows)} samples for {len(config.cells())} cell(s) "
          f"at {sweep.digits} digits -> {args.out}")
    return 0


def _read_aggregates(path):
    """aggregates.csv -> (series map (n1,n2,norm,mu) -> [(ljt, log10 mean)], digits)."""
    series = {}
    digits = None
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(AGGREGATES_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise SystemExit2(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            key = (int(row["n1"]), int(row["n2"]), row["norm_kind"], row["mu"])
            series.setdefault(key, []).append(
                (float(row["log10_jtau"]), float(row["log10_mean"])))
            digits = int(row["digits"])
    if not series:
        raise SystemExit2(f"{path}: no data rows")
    return series, digits


def cmd_fit(args) -> int:
    series, digits = _read_aggregates(args.aggregates)
    window = None
    if args.window_lo is not None or args.window_hi is not None:
        if args.window_lo is None or args.window_hi is None:
            raise SystemExit2("--window-lo and --window-hi go together")
        window = (args.window_lo, args.window_hi)
    log_floor = 2.0 - digits
    rows = []
    for (n1, n2, norm_kind, mu), pts in sorted(series.items()):
        try:
            fit = fit_exponent(pts, window=window, log_floor=log_floor)
        except QddError as exc:
            print(f"skipping ({n1},{n2},{norm_kind},{mu}): {exc}", file=sys.stderr)
            continue
        rows.append([n1, n2, norm_kind, mu, _e(fit.slope_raw), fit.n_hat,
                     _e(fit.intercept), _g(fit.window[0]), _g(fit.window[1]),
                     _e(fit.r2), _e(fit.stderr), fit.n_points,
                     int(fit.flagged)])
    out = args.out or "fits.csv"
    _write_csv(out, FITS_HEADER, rows)
    print(f"wrote {len(rows)} fits -> {out}")
    return 0


def cmd_predict(args) -> int:
    e = predicted_exponents(args.n1, args.n2)
    print(f"n_x={e.n_x} n_y={e.n_y} n_z={e.n_z} n_D={e.n_d}")
    return 0


def cmd_compare(args) -> int:
    series, digits = _read_aggregates(args.aggregates)
    cells = sorted({(k[0], k[1]) for k in series if k[0] >= 1 and k[1] >= 1})
    if not cells:
        raise SystemExit2("aggregates contain no QDD cells to compare")
    norm_kind = _NORM_FLAG[args.norm][0]
    log_floor = 2.0 - digits
    window = None
    if args.window_lo is not None and args.window_hi is not None:
        window = (args.window_lo, args.window_hi)
    from .scaling import CompareReport, CompareRow
    rows = []
    for (n1, n2) in cells:
        pred = predicted_exponents(n1, n2)
        for mu, expected in (("x", pred.n_x), ("y", pred.n_y),
                             ("z", pred.n_z), ("D", pred.n_d)):
            key = (n1, n2, norm_kind, mu)
            if key not in series:
                raise SystemExit2(f"aggregates missing series {key}")
            fit = fit_exponent(series[key], window=window, log_floor=log_floor)
            rows.append(CompareRow(n1=n1, n2=n2, mu=mu, predicted=expected,
                                   fitted=fit.n_hat, slope_raw=fit.slope_raw,
                                   match=fit.n_hat == expected))
    report = CompareReport(rows=tuple(rows), norm_kind=norm_kind)
    text = report.render()
    out = args.out or "report.txt"
    with open(out, "w") as fh:
        fh.write(text + "\n")
    print(text)
    return 3 if report.mismatches else 0


def cmd_intermediate(args) -> int:
    try:
        spec = parse_seq(args.seq)
    except QddError as exc:
        raise SystemExit2(f"bad --seq: {exc}")
    if spec.depth != 2:
        raise SystemExit2("intermediate errors need a depth-2 sequence")
    if args.jtau_log is not None:
        grid = (args.jtau_log,)
    else:
        grid = _grid_from_flags(args)
    digits = args.digits if args.digits == "auto" else int(args.digits)
    config = SweepConfig(kind="qdd", n1_list=(spec.levels[0].order,),
                         n2_list=(spec.levels[1].order,),
                         log_jtau_grid=grid, realizations=args.realizations,
                         seed=args.seed, j_coupling=args.j, beta=args.beta,
                         digits=digits, norm_kinds=_NORM_FLAG[args.norm])
    os.makedirs(args.out, exist_ok=True)
    started = _utc()
    rows, used_digits = run_intermediate(config, threads=args.threads)
    n1, n2 = config.cells()[0]
    agg = aggregate_intermediate(rows)
    out_rows = []
    for (ljt, j, mu, norm_kind), (mean, stderr) in agg.items():
        if n2 % 2 == 0 and j == n2 + 2:
            continue        # coincides with j = N2+1 for even outer order
        out_rows.append([n1, n2, _g(ljt), j, mu, norm_kind, _e(mean), _e(stderr),
                         config.realizations, used_digits])
    _write_csv(os.path.join(args.out, "intermediate.csv"),
               INTERMEDIATE_HEADER, out_rows)
    _write_manifest(os.path.join(args.out, "manifest.json"), "intermediate",
                    config, used_digits, {"started": started, "finished": _utc()})
    print(f"wrote {len(out_rows)} intermediate rows -> {args.out}")
    return 0


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "qddlab"
    import matplotlib.pyplot as plt

    os.makedirs(args.out, exist_ok=True)
    written = []
    if args.aggregates:
        series, digits = _read_aggregates(args.aggregates)
        cells = sorted({(k[0], k[1]) for k in series})
        norm_kind = _NORM_FLAG[args.norm][0]
        for (n1, n2) in cells:
            fig, ax = plt.subplots(figsize=(5, 4))
            for mu, style in (("x", "g-o"), ("y", "r:s"), ("z", "k--d"),
                              ("D", "b-.^")):
                pts = sorted(series.get((n1, n2, norm_kind, mu), []))
                if not pts:
                    continue
                xs = [p[0] for p in pts]
                ys = [p[1] for p in pts]
                ax.plot(xs, ys, style, label=mu, markersize=3)
                try:
                    fit = fit_exponent(pts, log_floor=2.0 - digits)
                    ax.axvline(fit.window[1], color=style[0], alpha=0.25, lw=0.8)
                except QddError:
                    pass
            ax.set_xlabel("log10(J tau)")
            ax.set_ylabel("log10(error)")
            ax.set_title(f"orders ({n1}, {n2})")
            ax.legend(loc="best", fontsize=8)
            path = os.path.join(args.out, f"errors_n1={n1}_n2={n2}.svg")
            fig.savefig(path, metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    elif args.intermediate:
        groups = {}
        with open(args.intermediate, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                key = (int(row["n1"]), int(row["n2"]),
                       float(row["log10_jtau"]), row["norm_kind"])
                groups.setdefault(key, {}).setdefault(row["mu"], []).append(
                    (int(row["j"]), float(row["mean_error"])))
        if not groups:
            raise SystemExit2(f"{args.intermediate}: no data rows")
        for (n1, n2, ljt, norm_kind), curves in sorted(groups.items()):
            fig, ax = plt.subplots(figsize=(5, 4))
            for mu, style in (("x", "g-o"), ("y", "r:s"), ("z", "k--d")):
                pts = sorted(curves.get(mu, []))
                if not pts:
                    continue
                ax.semilogy([p[0] for p in pts], [p[1] for p in pts],
                            style, label=mu, markersize=3)
            ax.set_xlabel("checkpoint j")
            ax.set_ylabel("error")
            ax.set_title(f"orders ({n1}, {n2}), log10(J tau) = {_g(ljt)}")
            ax.legend(loc="best", fontsize=8)
            path = os.path.join(
                args.out, f"intermediate_n1={n1}_n2={n2}_ljt={_g(ljt)}.svg")
            fig.savefig(path, metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    else:
        raise SystemExit2("give --aggregates or --intermediate")
    print(f"wrote {len(written)} SVG file(s) -> {args.out}")
    return 0


# --- argument parsing ----------------------------------------------------------------


def _add_grid_flags(p, with_single=False):
    p.add_argument("--jtau-log-min", type=float, default=-9.0,
                   help="leftmost log10(J*tau) (default -9)")
    p.add_argument("--jtau-log-max", type=float, default=2.0,
                   help="rightmost log10(J*tau) (default 2)")
    p.add_argument("--jtau-log-step", type=float, default=1.0,
                   help="grid step (default 1)")
    if with_single:
        p.add_argument("--jtau-log", type=float, default=None,
                       help="single log10(J*tau) point (overrides the grid flags)")


def _add_run_flags(p):
    p.add_argument("--realizations", type=int, default=50,
                   help="random bath realizations per cell (default 50)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--j", type=float, default=1e-4,
                   help="interaction strength ||H_SB|| (default 1e-4)")
    p.add_argument("--beta", type=float, default=1e-6,
                   help="pure-bath strength ||H_B|| (default 1e-6)")
    p.add_argument("--digits", default="auto",
                   help="working decimal digits, or 'auto' (default)")
    p.add_argument("--norm", choices=("nuclear", "hs", "both"),
                   default="nuclear", help="error norm (default nuclear)")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker processes (default: QDDLAB_THREADS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qddlab",
        description="Nested dynamical-decoupling simulator and scaling analysis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="evolve sequences over a J*tau grid")
    p.add_argument("--seq", default=None,
                   help='sequence text: "QDD(a,b)", "UDD(ax,n)", "NEST(...)" or FREE')
    p.add_argument("--n1", default=None, help="comma list of inner orders")
    p.add_argument("--n2", default=None, help="comma list of outer orders")
    _add_grid_flags(p)
    _add_run_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit slopes from aggregates.csv")
    p.add_argument("--aggregates", required=True)
    p.add_argument("--window-lo", type=float, default=None)
    p.add_argument("--window-hi", type=float, default=None)
    p.add_argument("--out", default=None, help="output file (default fits.csv)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="closed-form suppression orders")
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("compare", help="fitted vs predicted exponent table")
    p.add_argument("--aggregates", required=True)
    p.add_argument("--norm", choices=("nuclear", "hs"), default="nuclear")
    p.add_argument("--window-lo", type=float, default=None)
    p.add_argument("--window-hi", type=float, default=None)
    p.add_argument("--out", default=None, help="output file (default report.txt)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("intermediate", help="checkpoint-resolved errors")
    p.add_argument("--seq", required=True, help='depth-2 sequence, e.g. "QDD(2,4)"')
    _add_grid_flags(p, with_single=True)
    _add_run_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_intermediate)

    p = sub.add_parser("plot", help="render CSVs as SVG panels")
    p.add_argument("--aggregates", default=None)
    p.add_argument("--intermediate", default=None)
    p.add_argument("--norm", choices=("nuclear", "hs"), default="nuclear")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PrecisionExhausted as exc:
        print(f"precision failure: {exc}\nhint: raise --digits", file=sys.stderr)
        return 4
    except QddError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
