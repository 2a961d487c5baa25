"""Inner l2-l1 solver and the classical initializers."""
from .mmgks import L2L1Problem, MmgksConfig, SolveReport, mmgks_solve, objective
from .split_bregman import solve_residual_formulation, split_bregman_2d, tv_objective
from .ssi import sparse_spike_inversion, sparse_spike_trace

__all__ = [
    "L2L1Problem",
    "MmgksConfig",
    "SolveReport",
    "mmgks_solve",
    "objective",
    "solve_residual_formulation",
    "split_bregman_2d",
    "tv_objective",
    "sparse_spike_inversion",
    "sparse_spike_trace",
]
