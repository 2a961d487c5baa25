"""Phantom benchmark: synthesize data, initialize, iterate, tabulate.

A *cell* is one (noise level, initializer) pair. Cells are independent and
may run on a thread pool; each cell is sequential inside.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import GraphlaError, StageError
from .forward import ForwardOperator, build_forward, ricker
from .grid import digest, normalize, save_grid
from .iterate import IterationConfig, IterationHistory, load_initializer, run
from .metrics import add_noise_to_psnr
from .phantom import PhantomSpec, make_phantom
from .solvers.split_bregman import split_bregman_2d
from .solvers.ssi import sparse_spike_inversion


@dataclass(frozen=True)
class WaveletConfig:
    peak_freq: float = 30.0
    dt: float = 0.002
    half_width: int = 25


# Desk-scale weights, calibrated once on phantom/noise seed 0 (see scripts/calibrate_init.py)
DESK_ALPHA = {"sb": 0.15, "ssi": 1.5}


@dataclass(frozen=True)
class InitConfig:
    """Initializer choice: ``"sb"``, ``"ssi"`` or ``"external"`` (with ``path``).

    ``alpha``/``beta`` default to the desk-scale weights of the kind.
    """

    kind: str = "sb"
    alpha: float | None = None
    beta: float | None = None
    iters: int = 100
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("sb", "ssi", "external"):
            raise ValueError(f"unknown initializer {self.kind!r}")
        if self.kind == "external" and not self.path:
            raise ValueError("external initializer needs a path")
        default = DESK_ALPHA.get(self.kind)
        if self.alpha is None:
            object.__setattr__(self, "alpha", default)
        if self.beta is None:
            object.__setattr__(self, "beta", self.alpha)
        if self.kind != "external" and not (self.alpha > 0 and self.beta > 0):
            raise ValueError("initializer weights must be positive")

    @property
    def label(self) -> str:
        return self.kind


@dataclass(frozen=True)
class BenchConfig:
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    wavelet: WaveletConfig = field(default_factory=WaveletConfig)
    undersample: int = 4
    levels: tuple = (None, 39.0, 33.0, 30.0, 27.0)  # None = noiseless
    inits: tuple = (InitConfig("ssi"), InitConfig("sb"))
    iteration: IterationConfig = field(default_factory=IterationConfig)
    noise_seed: int = 0
    threads: int | None = None


@dataclass
class CellResult:
    level: float | None
    init: str
    x0: np.ndarray
    history: IterationHistory
    delta: float

    @property
    def name(self) -> str:
        return f"{self.init}_{level_label(self.level)}"

    @property
    def init_metrics(self):
        return self.history.metrics_per_iter[0]

    @property
    def final_metrics(self):
        return self.history.metrics_per_iter[-1]


@dataclass
class BenchReport:
    config: BenchConfig
    truth: np.ndarray
    cells: list

    def cell(self, init: str, level) -> CellResult:
        for c in self.cells:
            if c.init == init and c.level == level:
                return c
        raise KeyError((init, level))

    def table(self) -> str:
        """Text table: one block at initialization, one after N iterations."""
        levels = list(self.config.levels)
        inits = [i.label for i in self.config.inits]
        head = "".join(f"{level_label(lv):>22}" for lv in levels)
        lines = []
        n = self.config.iteration.n_iter
        for block, pick in (("init", lambda c: c.init_metrics), (f"after {n}", lambda c: c.final_metrics)):
            lines.append(f"{block:<10}{head}")
            for name in inits:
                cells = [pick(self.cell(name, lv)) for lv in levels]
                lines.append(f"{name:<10}" + "".join(f"{m[0]:>11.5f}{m[1]:>11.5f}" for m in cells))
        return "\n".join(lines)


def level_label(level) -> str:
    return "noiseless" if level is None else f"psnr{level:g}"


def make_operator(wavelet: WaveletConfig, n_t: int, undersample: int) -> ForwardOperator:
    return build_forward(ricker(wavelet.peak_freq, wavelet.dt, wavelet.half_width), n_t, undersample)


def initialize(init: InitConfig, K: ForwardOperator, y, shape) -> np.ndarray:
    if init.kind == "ssi":
        return sparse_spike_inversion(K, y, init.alpha)[0]
    if init.kind == "sb":
        return split_bregman_2d(K, y, init.alpha, init.beta, init.iters)
    return np.asarray(load_initializer(init.path, shape))


def noise_seed(base: int, level: float) -> int:
    """Seed of the noise realization; shared by all initializers at one level."""
    return 100_000 * base + int(round(100 * level))


def threads_from_env(threads=None) -> int:
    if threads is None:
        threads = os.environ.get("GRAPHLA_THREADS") or os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be positive")
    return threads


def run_cell(cfg: BenchConfig, truth, K, y_clean, level_index, init: InitConfig) -> CellResult:
    level = cfg.levels[level_index]
    if level is None:
        y, delta = y_clean, 0.0
    else:
        y, delta = add_noise_to_psnr(y_clean, level, noise_seed(cfg.noise_seed, level))
    tag = f"{init.label}_{level_label(level)}"
    try:
        x0 = initialize(init, K, y, truth.shape)
    except GraphlaError as exc:
        raise StageError(f"{tag}: initializer", exc) from exc
    # the synthetic noise norm is known exactly, including zero
    hist = run(K, y, x0, delta=delta, cfg=cfg.iteration, truth=truth)
    return CellResult(level, init.label, x0, hist, hist.delta)


def run_benchmark(cfg: BenchConfig | None = None, out_dir=None) -> BenchReport:
    """Run every (level, initializer) cell.

    Args:
        cfg: Benchmark configuration.
        out_dir: When given, a report directory is written there (see
            ``write_report``).

    Returns:
        BenchReport with per-cell histories.
    """
    cfg = cfg or BenchConfig()
    truth = normalize(make_phantom(cfg.phantom))[0]
    K = make_operator(cfg.wavelet, cfg.phantom.n_t, cfg.undersample)
    y_clean = K.apply(truth)
    jobs = [(li, init) for li in range(len(cfg.levels)) for init in cfg.inits]
    threads = min(threads_from_env(cfg.threads), len(jobs))
    if threads == 1:
        cells = [run_cell(cfg, truth, K, y_clean, li, init) for li, init in jobs]
    else:
        with ThreadPoolExecutor(threads) as pool:
            futures = [pool.submit(run_cell, cfg, truth, K, y_clean, li, init) for li, init in jobs]
            cells = [f.result() for f in futures]
    report = BenchReport(cfg, truth, cells)
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def metrics_csv(cell: CellResult) -> str:
    rows = ["iter,dmse,ssim,alpha,residual"]
    for n, (dm, ss) in enumerate(cell.history.metrics_per_iter):
        if n == 0:
            alpha, res = "", ""
        else:
            rep = cell.history.reports[n - 1]
            alpha, res = f"{rep.alpha:.10e}", f"{rep.residual_norm:.10e}"
        rows.append(f"{n},{dm:.10e},{ss:.10e},{alpha},{res}")
    return "\n".join(rows) + "\n"


def _colour(grid, lo, hi):
    """Blue-white-red colour map as an ``n_t x n_x x 3`` uint8 image."""
    t = np.clip((np.asarray(grid) - lo) / max(hi - lo, 1e-300), 0.0, 1.0)
    r = np.clip(2 * t, 0, 1)
    b = np.clip(2 - 2 * t, 0, 1)
    g = 1 - np.abs(2 * t - 1)
    return np.rint(255 * np.stack([r, g, b], axis=-1)).astype(np.uint8)


def write_ppm(grid, path, lo=None, hi=None) -> None:
    grid = np.asarray(grid, dtype=np.float64)
    lo = grid.min() if lo is None else lo
    hi = grid.max() if hi is None else hi
    img = _colour(grid, lo, hi)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def write_report(report: BenchReport, out_dir) -> Path:
    """Write ``{cell}/x0.grd, xN.grd, metrics.csv, manifest.json, plots/*.ppm``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lo, hi = float(report.truth.min()), float(report.truth.max())
    save_grid(report.truth, out / "truth.grd")
    (out / "table.txt").write_text(report.table() + "\n")
    for cell in report.cells:
        d = out / cell.name
        (d / "plots").mkdir(parents=True, exist_ok=True)
        n = len(cell.history.metrics_per_iter) - 1
        save_grid(cell.x0, d / "x0.grd")
        save_grid(cell.history.final, d / f"x{n}.grd")
        (d / "metrics.csv").write_text(metrics_csv(cell))
        for k, x in enumerate(cell.history.iterates):
            write_ppm(x, d / "plots" / f"iter{k:02d}.ppm", lo, hi)
        write_ppm(report.truth, d / "plots" / "truth.ppm", lo, hi)
        manifest = {
            "cell": cell.name,
            "level_psnr": cell.level,
            "init": cell.init,
            "delta": cell.delta,
            "flags": cell.history.flags,
            "phantom": asdict(report.config.phantom),
            "wavelet": asdict(report.config.wavelet),
            "undersample": report.config.undersample,
            "n_iter": report.config.iteration.n_iter,
            "graph": {
                "radius": report.config.iteration.graph.radius,
                "sigma": report.config.iteration.graph.sigma,
                "dist": str(report.config.iteration.graph.dist.value),
            },
            "noise_seed": report.config.noise_seed,
            "digests": {"truth": digest(report.truth), "x0": digest(cell.x0), "xN": digest(cell.history.final)},
            "solves": [r.to_record() for r in cell.history.reports],
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out
