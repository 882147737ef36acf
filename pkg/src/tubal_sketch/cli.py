"""Command-line interface.

Subcommands: synth, approximate, bench, spectrum, metrics, img2tns,
tns2img, noise.  Exit codes: 0 on success, 1 on a runtime or compute
failure, 2 on a usage or configuration error (including malformed input
files).  Every numeric result is a pure function of the inputs and the
master seed; the thread count only changes scheduling.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, data_io, figures, lowrank, tensor_core
from .lowrank import METHOD_IDS, MethodSpec, PI_METHODS
from .sketch_ops import OPERATOR_KINDS, OPERATOR_MODES, SeedStream

THREADS_ENV = "TUBAL_SKETCH_THREADS"
TRANSFORM_KINDS = ("dft", "dct", "u", "identity")
SYNTH_KINDS = {"poly-slow": 0.5, "poly-fast": 2.0}
CSV_FIELDS = ("method", "k", "s", "q", "trial", "seed", "rel_err", "psnr", "wall_ms")


class UsageError(Exception):
    """Bad invocation or configuration; maps to exit code 2."""


def _fmt(v):
    return f"{v:.17g}"


def _resolve_threads(value):
    if value is None:
        value = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise UsageError(f"thread count must be an integer, got {value!r}")
    if threads < 1:
        raise UsageError("thread count must be >= 1")
    return threads


def _parse_grid(text):
    """Rank grid: a single value, a comma list, or start:stop:step."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step < 1 or stop < start:
                raise ValueError
            values = list(range(start, stop + 1, step))
        else:
            values = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad rank grid {text!r}; use K, K1,K2,... or start:stop:step")
    if not values or any(v < 1 for v in values):
        raise UsageError(f"rank grid {text!r} must contain positive values")
    return values


def _resolve_s(explicit, rule, k):
    if explicit is not None:
        return explicit
    if rule != "2k+1":
        raise UsageError(f"unknown sketch-size rule {rule!r}")
    return 2 * k + 1


def _default_q(method, explicit):
    if explicit is not None:
        return explicit
    return 1 if method in PI_METHODS else 0


def _read_image(path):
    data = Path(path).read_bytes()
    if data.startswith(b"P6"):
        return data_io.read_ppm(path)
    if data.startswith(b"P5"):
        return data_io.read_pgm(path)[:, :, None]
    raise data_io.FormatError(f"{path}: not a binary PPM or PGM file")


def _spec_for(args, method, k, s, q, seed):
    return MethodSpec(
        method=method, k=k, s=s, q=q,
        transform=args.transform, operator=args.operator,
        operator_mode=args.operator_mode, seed=seed,
    )


def _run_once(spec, a):
    t0 = time.perf_counter()
    fa = lowrank.run_method(spec, a)
    ahat = lowrank.reconstruct(fa)
    wall_ms = (time.perf_counter() - t0) * 1e3
    return ahat, analysis.rel_error(a, ahat), analysis.psnr(a, ahat), wall_ms


def cmd_synth(args):
    if args.kind not in SYNTH_KINDS:
        raise UsageError(f"unknown kind {args.kind!r}; choose from {sorted(SYNTH_KINDS)}")
    if args.m != args.n:
        raise UsageError("diagonal generators need square slices (m == n)")
    spec = data_io.PolyDecaySpec(
        n=args.n, p_tubes=args.p, r=args.r, exponent=SYNTH_KINDS[args.kind]
    )
    data_io.write_tns(args.out, data_io.poly_decay(spec))
    print(f"wrote {args.n}x{args.n}x{args.p} {args.kind} tensor to {args.out}")
    return 0


def cmd_approximate(args):
    a = data_io.read_tns(args.input)
    k_values = _parse_grid(args.k)
    if len(k_values) != 1:
        raise UsageError("approximate takes a single rank, not a grid")
    k = k_values[0]
    s = _resolve_s(args.s, args.s_rule, k)
    q = _default_q(args.method, args.q)
    seed = SeedStream(args.seed).label(args.method, k, 0)
    spec = _spec_for(args, args.method, k, s, q, seed)
    ahat, rel, ps, wall_ms = _run_once(spec, a)
    if args.out:
        data_io.write_tns(args.out, ahat)
    print(
        f"method={spec.method} k={k} s={s} q={q} seed={seed} "
        f"rel_err={_fmt(rel)} psnr={_fmt(ps)} wall_ms={wall_ms:.3f}"
    )
    return 0


def _bench_rows(args, a, methods, k_grid, trials, threads):
    stream = SeedStream(args.seed)
    tasks = []
    for mi, method in enumerate(methods):
        for k in k_grid:
            s = _resolve_s(args.s, args.s_rule, k)
            q = _default_q(method, args.q)
            for trial in range(trials):
                seed = stream.label(method, k, trial)
                tasks.append((mi, method, k, s, q, trial, seed))

    def work(task):
        mi, method, k, s, q, trial, seed = task
        spec = _spec_for(args, method, k, s, q, seed)
        _, rel, ps, wall_ms = _run_once(spec, a)
        return {
            "method": method, "k": k, "s": s, "q": q, "trial": trial,
            "seed": seed, "rel_err": rel, "psnr": ps, "wall_ms": wall_ms,
            "_order": (mi, k, trial),
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, tasks))
    else:
        rows = [work(t) for t in tasks]
    rows.sort(key=lambda r: r["_order"])
    for row in rows:
        del row["_order"]
    return rows


def _write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in rows:
            writer.writerow([
                r["method"], r["k"], r["s"], r["q"], r["trial"], r["seed"],
                _fmt(r["rel_err"]), _fmt(r["psnr"]), _fmt(r["wall_ms"]),
            ])


def cmd_bench(args):
    a = data_io.read_tns(args.input)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise UsageError("no methods given")
    for m in methods:
        if m not in METHOD_IDS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHOD_IDS)}")
    k_grid = _parse_grid(args.k)
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    threads = _resolve_threads(args.threads)
    rows = _bench_rows(args, a, methods, k_grid, args.trials, threads)
    _write_rows(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if not args.no_plot:
        fig_path = str(Path(args.out).with_suffix(".png"))
        figures.bench_figure(rows, fig_path)
        print(f"wrote figure to {fig_path}")
    return 0


def cmd_spectrum(args):
    a = data_io.read_tns(args.input)
    try:
        q_list = [int(x) for x in args.q_list.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad power list {args.q_list!r}")
    if not q_list:
        raise UsageError("power list must not be empty")
    transform = lowrank._make_transform(args.transform or "dct", a)
    columns = analysis.spectrum(transform, a, q_list)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "q", "sigma_normalized"])
        for q in q_list:
            for i, val in enumerate(columns[q], start=1):
                writer.writerow([i, q, _fmt(val)])
    print(f"wrote spectrum ({len(q_list)} power counts) to {args.out}")
    if not args.no_plot:
        fig_path = str(Path(args.out).with_suffix(".png"))
        figures.spectrum_figure(columns, fig_path)
        print(f"wrote figure to {fig_path}")
    return 0


def cmd_metrics(args):
    ref = data_io.read_tns(args.ref)
    approx = data_io.read_tns(args.approx)
    if ref.shape != approx.shape:
        raise UsageError(f"shape mismatch: {ref.shape} vs {approx.shape}")
    print(
        f"rel_err={_fmt(analysis.rel_error(ref, approx))} "
        f"psnr={_fmt(analysis.psnr(ref, approx))}"
    )
    return 0


def cmd_img2tns(args):
    data_io.write_tns(args.out, _read_image(args.input))
    print(f"wrote {args.out}")
    return 0


def cmd_tns2img(args):
    a = data_io.read_tns(args.input)
    if a.shape[2] == 3:
        data_io.write_ppm(args.out, a)
    elif a.shape[2] == 1:
        data_io.write_pgm(args.out, a)
    else:
        raise UsageError(f"cannot render {a.shape[2]} slices as an image (need 1 or 3)")
    print(f"wrote {args.out}")
    return 0


def cmd_noise(args):
    a = data_io.read_tns(args.input)
    if args.sigma < 0:
        raise UsageError("sigma must be >= 0")
    rng = SeedStream(args.seed).substream("noise")
    data_io.write_tns(args.out, data_io.add_noise(a, args.sigma, rng))
    print(f"wrote {args.out}")
    return 0


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sub.add_argument("--threads", default=None,
                     help=f"worker threads (default ${THREADS_ENV} or 1)")


def _add_method_config(sub, k_help):
    sub.add_argument("--transform", choices=TRANSFORM_KINDS, default=None,
                     help="transform override (default depends on the method)")
    sub.add_argument("--operator", choices=OPERATOR_KINDS, default="gaussian")
    sub.add_argument("--operator-mode", choices=OPERATOR_MODES, default="pure")
    sub.add_argument("--k", required=True, help=k_help)
    sub.add_argument("--s", type=int, default=None,
                     help="sketch core width (default from --s-rule)")
    sub.add_argument("--s-rule", default="2k+1", help="rule for s when --s is absent")
    sub.add_argument("--q", type=int, default=None,
                     help="power-iteration count (default 1 for -pi methods, else 0)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tubal-sketch",
        description="Low tubal-rank tensor approximation by randomized sketching.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic diagonal test tensor")
    p.add_argument("kind", help="poly-slow or poly-fast")
    p.add_argument("m", type=int)
    p.add_argument("n", type=int)
    p.add_argument("p", type=int)
    p.add_argument("--r", type=int, default=10, help="diagonal plateau length")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("approximate", help="run one method on a tensor file")
    p.add_argument("--input", required=True)
    p.add_argument("--method", required=True, choices=METHOD_IDS)
    _add_method_config(p, "target tubal rank")
    p.add_argument("--out", default=None, help="where to write the reconstruction")
    _add_common(p)
    p.set_defaults(func=cmd_approximate)

    p = subs.add_parser("bench", help="run a method/rank grid and write CSV")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--methods",
        default="truncated-t-svd,dct-gaussian-sketch-pi,dct-gaussian-sketch,t-sketch",
        help="comma-separated method ids",
    )
    _add_method_config(p, "rank grid: K, K1,K2,... or start:stop:step")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--no-plot", action="store_true",
                   help="skip the companion PNG figure")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = subs.add_parser("spectrum", help="normalized singular-value profiles")
    p.add_argument("--input", required=True)
    p.add_argument("--transform", choices=TRANSFORM_KINDS, default="dct")
    p.add_argument("--q-list", default="0,1", help="comma-separated power counts")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--no-plot", action="store_true",
                   help="skip the companion PNG figure")
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = subs.add_parser("metrics", help="compare two tensor files")
    p.add_argument("ref")
    p.add_argument("approx")
    _add_common(p)
    p.set_defaults(func=cmd_metrics)

    p = subs.add_parser("img2tns", help="convert a PPM/PGM image to a tensor file")
    p.add_argument("input")
    p.add_argument("out")
    _add_common(p)
    p.set_defaults(func=cmd_img2tns)

    p = subs.add_parser("tns2img", help="convert a tensor file to a PPM/PGM image")
    p.add_argument("input")
    p.add_argument("out")
    _add_common(p)
    p.set_defaults(func=cmd_tns2img)

    p = subs.add_parser("noise", help="add white Gaussian noise to a tensor file")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--sigma", type=float, default=5.0)
    _add_common(p)
    p.set_defaults(func=cmd_noise)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except (UsageError, data_io.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # keep the exit-code contract for odd failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
