"""Layered impedance phantoms with gently dipping boundaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhantomSpec:
    n_t: int = 128
    n_x: int = 64
    n_layers: int = 8
    dip: float = 0.15
    impedance_range: tuple = (2.0, 8.0)
    seed: int = 0
    smooth_background: bool = False

    def __post_init__(self):
        if self.n_layers < 2:
            raise ValueError("need at least two layers")
        lo, hi = self.impedance_range
        if not lo < hi:
            raise ValueError("impedance_range must satisfy lo < hi")
        if self.n_t < 2 * self.n_layers or self.n_x < 1:
            raise ValueError("grid too small for the requested number of layers")


def boundary_depths(spec: PhantomSpec, rng) -> np.ndarray:
    """Integer boundary rows, shape ``(n_layers - 1, n_x)``, strictly increasing down each column."""
    nb = spec.n_layers - 1
    margin = max(2, spec.n_t // (4 * spec.n_layers))
    base = np.linspace(margin, spec.n_t - margin, nb + 2)[1:-1]
    gap = (spec.n_t - 2 * margin) / (nb + 1)
    base = base + rng.uniform(-0.25, 0.25, nb) * gap
    slopes = rng.uniform(-spec.dip, spec.dip, nb)
    cols = np.arange(spec.n_x) - (spec.n_x - 1) / 2.0
    depth = np.rint(base[:, None] + slopes[:, None] * cols[None, :]).astype(int)
    depth = np.sort(depth, axis=0)
    for k in range(1, nb):
        depth[k] = np.maximum(depth[k], depth[k - 1] + 2)
    return np.clip(depth, 1, spec.n_t - 1)


def layer_values(spec: PhantomSpec, rng) -> np.ndarray:
    lo, hi = spec.impedance_range
    min_jump = 0.12 * (hi - lo)
    vals = [rng.uniform(lo, hi)]
    while len(vals) < spec.n_layers:
        v = rng.uniform(lo, hi)
        if abs(v - vals[-1]) >= min_jump:
            vals.append(v)
    return np.array(vals)


def make_phantom(spec: PhantomSpec) -> np.ndarray:
    """Piecewise-constant layered grid, optionally on a smooth background trend.

    The same seed always yields the same grid.
    """
    rng = np.random.default_rng(spec.seed)
    depth = boundary_depths(spec, rng)
    vals = layer_values(spec, rng)
    rows = np.arange(spec.n_t)[:, None]
    layer = (rows[None, :, :] >= depth[:, None, :]).sum(axis=0)
    x = vals[layer]
    if spec.smooth_background:
        lo, hi = spec.impedance_range
        j = np.arange(spec.n_x)
        slope = 0.3 * (hi - lo) / spec.n_t * (1.0 + 0.2 * np.sin(2 * np.pi * j / max(spec.n_x, 2)))
        x = x + rows * slope[None, :]
    return x.astype(np.float64)
