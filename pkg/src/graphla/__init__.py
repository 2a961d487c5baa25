"""Iterated graph-Laplacian regularization for post-stack seismic impedance inversion."""
from .errors import GraphlaError, StageError
from .forward import ForwardOperator, Wavelet, build_forward, estimate_wavelet, ricker
from .grid import ImpedanceGrid, NoiseModel, SeismicGrid, load_grid, normalize, save_grid
from .iterate import IterationConfig, IterationHistory, graph_step, run
from .laplacian import Dist, GraphSpec, build_laplacian
from .metrics import SsimConfig, d_mse, psnr, ssim

__version__ = "0.1.0"

__all__ = [
    "Dist",
    "ForwardOperator",
    "GraphSpec",
    "GraphlaError",
    "ImpedanceGrid",
    "IterationConfig",
    "IterationHistory",
    "NoiseModel",
    "SeismicGrid",
    "SsimConfig",
    "StageError",
    "Wavelet",
    "build_forward",
    "build_laplacian",
    "d_mse",
    "estimate_wavelet",
    "graph_step",
    "load_grid",
    "normalize",
    "psnr",
    "ricker",
    "run",
    "save_grid",
    "ssim",
]
