"""``graphla`` command line: invert, benchmark, estimate-wavelet, make-phantom, metrics.

Exit codes: 0 success, 1 a pipeline stage failed, 2 bad arguments.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .bench import BenchConfig, InitConfig, WaveletConfig, initialize, run_benchmark, threads_from_env
from .errors import GraphlaError, StageError
from .forward import build_forward, estimate_wavelet, load_wavelet, ricker, save_wavelet
from .grid import digest, load_grid, save_grid
from .iterate import IterationConfig, run
from .laplacian import GraphSpec
from .metrics import add_noise_to_psnr, d_mse, ssim
from .phantom import PhantomSpec, make_phantom
from .solvers.mmgks import MmgksConfig

EXIT_OK, EXIT_STAGE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_wavelet(text: str, dt: float, half_width: int, seismic=None):
    """``ricker:<Hz>``, ``file:<path>`` or ``estimate`` (needs the seismic grid)."""
    kind, _, arg = text.partition(":")
    if kind == "ricker":
        try:
            freq = float(arg)
        except ValueError:
            raise UsageError(f"bad Ricker frequency in {text!r}") from None
        return ricker(freq, dt, half_width)
    if kind == "file" and arg:
        return load_wavelet(arg)
    if kind == "estimate" and not arg:
        return estimate_wavelet(seismic, 2 * half_width + 1, dt=dt)
    raise UsageError(f"--wavelet must be ricker:<Hz>, file:<path> or estimate, got {text!r}")


def parse_init(text: str, alpha, beta, iters=100) -> InitConfig:
    kind, _, arg = text.partition(":")
    if kind == "external":
        if not arg:
            raise UsageError("--init external needs a path: external:<path>")
        return InitConfig("external", path=arg)
    if kind not in ("sb", "ssi") or arg:
        raise UsageError(f"--init must be sb, ssi or external:<path>, got {text!r}")
    return InitConfig(kind, alpha=alpha, beta=beta, iters=iters)


def default_nt(m_t: int, u: int) -> int:
    """Smallest-looking n_t consistent with ``m_t`` output rows."""
    n = m_t * u
    return n if math.ceil((n - 1) / u) == m_t else n + 1


def parse_levels(text: str):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"--levels must be comma separated dB values, got {text!r}") from None


def read_config(path, parser) -> dict:
    """Flat ``key = value`` file; keys are long flag names (dashes or underscores)."""
    by_dest = {a.dest: a for a in parser._actions if a.option_strings}
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        value = value.strip()
        if not sep or key not in by_dest or key in ("config", "help"):
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        action = by_dest[key]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{path}:{lineno}: {key} expects a boolean")
            out[key] = value.lower() in ("true", "1", "yes")
            continue
        try:
            out[key] = action.type(value) if action.type else value
        except (TypeError, ValueError):
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def _emit(args, record: dict, text: str) -> None:
    if args.json:
        print(json.dumps(record, sort_keys=True))
    else:
        print(text)


def _iteration_config(args) -> IterationConfig:
    return IterationConfig(
        n_iter=args.iters,
        graph=GraphSpec(radius=args.R, sigma=args.sigma, dist=args.dist),
        solver=MmgksConfig(max_inner_sweeps=args.sweeps, subspace_dim=args.subspace_dim),
    )


def cmd_invert(args) -> int:
    y = load_grid(args.seismic)
    u = args.undersample
    n_t = args.nt or default_nt(y.shape[0], u)
    try:
        wavelet = parse_wavelet(args.wavelet, args.dt, args.half_width, y)
        K = build_forward(wavelet, n_t, u)
    except GraphlaError as exc:
        raise StageError("forward model", exc) from exc
    if K.m_t != y.shape[0]:
        raise UsageError(f"--nt {n_t} with --undersample {u} gives {K.m_t} rows, seismic has {y.shape[0]}")
    init = parse_init(args.init, args.alpha, args.beta)
    try:
        x0 = initialize(init, K, y, (n_t, y.shape[1]))
    except GraphlaError as exc:
        raise StageError(f"initializer {init.kind}", exc) from exc
    hist = run(K, y, x0, delta=args.delta, cfg=_iteration_config(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    final = f"x{args.iters}.grd"
    save_grid(x0, out / "x0.grd")
    save_grid(hist.final, out / final)
    manifest = {
        "seismic": str(args.seismic),
        "seismic_digest": digest(y),
        "init": init.kind,
        "init_params": {"alpha": init.alpha, "beta": init.beta, "path": init.path},
        "n_t": n_t,
        "undersample": u,
        "wavelet": args.wavelet,
        "radius": args.R,
        "sigma": args.sigma,
        "iters": args.iters,
        "delta": hist.delta,
        "flags": hist.flags,
        "solves": [r.to_record() for r in hist.reports],
        "output": final,
        "output_digest": digest(hist.final),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _emit(args, manifest, f"wrote {out / final} (delta={hist.delta:.6g}, final alpha={hist.reports[-1].alpha:.6g})")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    inits = []
    for name in args.init.split(","):
        inits.append(parse_init(name.strip(), args.alpha, args.beta))
    phantom = PhantomSpec(n_t=args.nt, n_x=args.nx, n_layers=args.layers, seed=args.seed,
                          smooth_background=args.smooth)
    cfg = BenchConfig(
        phantom=phantom,
        wavelet=WaveletConfig(args.peak_freq, args.dt, args.half_width),
        undersample=args.undersample,
        levels=(None,) + parse_levels(args.levels),
        inits=tuple(inits),
        iteration=_iteration_config(args),
        noise_seed=args.noise_seed,
        threads=args.threads,
    )
    report = run_benchmark(cfg, out_dir=args.out)
    record = {
        c.name: {
            "init": {"dmse": c.init_metrics[0], "ssim": c.init_metrics[1]},
            "final": {"dmse": c.final_metrics[0], "ssim": c.final_metrics[1]},
        }
        for c in report.cells
    }
    _emit(args, record, report.table())
    return EXIT_OK


def cmd_make_phantom(args) -> int:
    spec = PhantomSpec(n_t=args.nt, n_x=args.nx, n_layers=args.layers, dip=args.dip,
                       impedance_range=(args.lo, args.hi), seed=args.seed, smooth_background=args.smooth)
    x = make_phantom(spec)
    save_grid(x, args.out)
    record = {"out": str(args.out), "shape": list(x.shape), "digest": digest(x)}
    if args.seismic_out:
        K = build_forward(parse_wavelet(args.wavelet, args.dt, args.half_width), spec.n_t, args.undersample)
        y = K.apply(x)
        if args.psnr is not None:
            y, delta = add_noise_to_psnr(y, args.psnr, args.seed)
            record["delta"] = delta
        save_grid(y, args.seismic_out)
        record["seismic_out"] = str(args.seismic_out)
    _emit(args, record, " ".join(f"{k}={v}" for k, v in record.items()))
    return EXIT_OK


def cmd_estimate_wavelet(args) -> int:
    y = load_grid(args.seismic)
    w = estimate_wavelet(y, args.length, norm_peak=args.norm_peak, dt=args.dt)
    save_wavelet(w, args.out)
    _emit(args, {"out": str(args.out), "length": len(w), "dt": w.dt}, f"wrote {args.out} ({len(w)} samples)")
    return EXIT_OK


def cmd_metrics(args) -> int:
    rec, truth = load_grid(args.rec), load_grid(args.truth)
    record = {"dmse": d_mse(rec, truth), "ssim": ssim(rec, truth)}
    _emit(args, record, f"dmse={record['dmse']:.10g} ssim={record['ssim']:.10g}")
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: GRAPHLA_THREADS or all cores)")


def _add_wavelet(p, default="ricker:30"):
    p.add_argument("--wavelet", default=default, help="ricker:<Hz>, file:<path> or estimate")
    p.add_argument("--dt", type=float, default=0.002, help="sample interval in seconds")
    p.add_argument("--half-width", type=int, default=25, help="wavelet half length in samples")
    p.add_argument("--undersample", type=int, default=4)


def _add_iteration(p):
    p.add_argument("--R", type=float, default=2.0, help="graph radius")
    p.add_argument("--sigma", type=float, default=0.25, help="intensity scale of the edge weights")
    p.add_argument("--dist", choices=["L1", "Linf"], default="Linf")
    p.add_argument("--iters", type=int, default=10, help="outer iterations N")
    p.add_argument("--sweeps", type=int, default=MmgksConfig.max_inner_sweeps, help="inner MMGKS sweeps")
    p.add_argument("--subspace-dim", type=int, default=MmgksConfig.subspace_dim)
    p.add_argument("--alpha", type=float, default=None, help="initializer weight (time direction)")
    p.add_argument("--beta", type=float, default=None, help="split Bregman weight (trace direction)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphla", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invert", help="invert a seismic grid")
    p.add_argument("--seismic", required=True)
    p.add_argument("--init", default="sb", help="sb, ssi or external:<path>")
    p.add_argument("--nt", type=int, default=None, help="impedance rows (default inferred from the seismic)")
    p.add_argument("--delta", type=float, default=None, help="noise bound (default: estimated)")
    p.add_argument("--out", default="out")
    _add_wavelet(p)
    _add_iteration(p)
    _add_common(p)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("benchmark", help="phantom benchmark over noise levels")
    p.add_argument("--levels", default="39,33,30,27", help="PSNR levels in dB; noiseless is always added")
    p.add_argument("--init", default="ssi,sb", help="comma separated list of sb, ssi, external:<path>")
    p.add_argument("--nt", type=int, default=128)
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--layers", type=int, default=8)
    p.add_argument("--smooth", action="store_true", help="add a smooth background trend")
    p.add_argument("--seed", type=int, default=0, help="phantom seed")
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--peak-freq", type=float, default=30.0)
    p.add_argument("--dt", type=float, default=0.002)
    p.add_argument("--half-width", type=int, default=25)
    p.add_argument("--undersample", type=int, default=4)
    p.add_argument("--out", default="report")
    _add_iteration(p)
    _add_common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("make-phantom", help="write a layered impedance phantom")
    p.add_argument("--out", required=True)
    p.add_argument("--nt", type=int, default=128)
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--layers", type=int, default=8)
    p.add_argument("--dip", type=float, default=0.15)
    p.add_argument("--lo", type=float, default=2.0)
    p.add_argument("--hi", type=float, default=8.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--seismic-out", default=None, help="also write synthetic seismic here")
    p.add_argument("--psnr", type=float, default=None, help="noise level of the synthetic seismic")
    _add_wavelet(p)
    _add_common(p)
    p.set_defaults(func=cmd_make_phantom)

    p = sub.add_parser("estimate-wavelet", help="estimate a zero-phase wavelet from seismic")
    p.add_argument("--seismic", required=True)
    p.add_argument("--length", type=int, default=51)
    p.add_argument("--norm-peak", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.002)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_estimate_wavelet)

    p = sub.add_parser("metrics", help="D-MSE and SSIM of a reconstruction")
    p.add_argument("--rec", required=True)
    p.add_argument("--truth", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_metrics)
    return parser


def _parse(parser, argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    if known.config and known.command in choices:
        sub = choices[known.command]
        values = read_config(known.config, sub)
        for action in sub._actions:
            if action.dest in values:
                action.required = False
        sub.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        try:
            args.threads = threads_from_env(args.threads)
        except ValueError as exc:
            raise UsageError(f"--threads: {exc}") from None
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"graphla: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphlaError, OSError, ValueError) as exc:
        label = exc if isinstance(exc, StageError) else f"{type(exc).__name__}: {exc}"
        print(f"graphla: {label}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
