"""Sparse spike inversion: trace-wise l1 deconvolution in reflectivity variables.

Writing ``x = b*1 + G r`` with ``G`` the inverse of the ``[1, -1]`` difference
(``x[i] = b - sum_{k<i} r[k]``), each trace solves

    min_r |y - K (b*1 + G r)|^2 + alpha |r|_1 .

Each trace is solved exactly by the lasso homotopy (LARS). Traces where the
homotopy stops short of optimality, which happens for tiny ``alpha`` on
degenerate paths, are finished by FISTA with adaptive restart started from
the homotopy result.
"""
from __future__ import annotations

import numpy as np
from sklearn.linear_model import lars_path

from ..errors import DimensionMismatch, SolverStalled
from ..forward import ForwardOperator


def _trace_matrix(K):
    if isinstance(K, ForwardOperator):
        K = K.trace
    if hasattr(K, "toarray"):
        K = K.toarray()
    return np.asarray(K, dtype=np.float64)


def integration_matrix(n_t: int) -> np.ndarray:
    """``n_t x (n_t - 1)`` matrix ``G`` with ``grad @ G = I`` and ``(G r)[0] = 0``."""
    return -np.tril(np.ones((n_t, n_t - 1)), k=-1)


def reflectivity_to_impedance(r, baseline=0.0) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    lead = np.zeros((1,) + r.shape[1:])
    return baseline - np.concatenate([lead, np.cumsum(r, axis=0)], axis=0)


def ssi_objective(A, y, r, alpha):
    res = A @ r - y
    return float(np.sum(res * res) + alpha * np.sum(np.abs(r)))


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def homotopy_l1(A, Y, alpha):
    """Lasso homotopy per column; sklearn scales the data term by ``1/(2m)``."""
    R = np.zeros((A.shape[1], Y.shape[1]))
    for j in range(Y.shape[1]):
        if not np.any(Y[:, j]):
            continue
        _, _, coefs = lars_path(A, Y[:, j], alpha_min=alpha / (2.0 * A.shape[0]),
                                method="lasso", return_path=False)
        R[:, j] = np.ravel(coefs)
    return R


def solve_l1(A, Y, alpha, max_iter=5000, tol=1e-12, kkt_tol=1e-8):
    """Minimize ``|A r - y|^2 + alpha |r|_1`` for every column ``y`` of ``Y``.

    Returns:
        tuple: ``(R, converged)`` where ``R`` has one column per trace.
    """
    A = np.asarray(A, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    R = homotopy_l1(A, Y, alpha)
    bad = [j for j in range(Y.shape[1]) if kkt_violation(A, Y[:, j], R[:, j], alpha) > kkt_tol]
    converged = True
    if bad:
        Rb, converged = fista_l1(A, Y[:, bad], alpha, max_iter, tol, R0=R[:, bad])
        for k, j in enumerate(bad):
            if ssi_objective(A, Y[:, j], Rb[:, k], alpha) < ssi_objective(A, Y[:, j], R[:, j], alpha):
                R[:, j] = Rb[:, k]
    return (R[:, 0] if squeeze else R), converged


def fista_l1(A, Y, alpha, max_iter=5000, tol=1e-12, R0=None):
    """FISTA with restart on all columns at once, then a support polish."""
    A = np.asarray(A, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    lip = 2.0 * np.linalg.norm(A, 2) ** 2
    if lip == 0:
        R = np.zeros((A.shape[1], Y.shape[1]))
        return (R[:, 0] if squeeze else R), True
    step = 1.0 / lip
    AtA = A.T @ A
    AtY = A.T @ Y
    R = np.zeros((A.shape[1], Y.shape[1])) if R0 is None else np.array(R0, dtype=np.float64)
    Z = R.copy()
    t = 1.0
    prev = _column_objectives(A, Y, R, alpha)
    converged = False
    for it in range(max_iter):
        grad = 2.0 * (AtA @ Z - AtY)
        R_new = _soft(Z - step * grad, alpha * step)
        obj = _column_objectives(A, Y, R_new, alpha)
        # gradient-style restart per trace keeps the iteration monotone
        bad = obj > prev
        if np.any(bad):
            R_new[:, bad] = _soft(R[:, bad] - step * 2.0 * (AtA @ R[:, bad] - AtY[:, bad]), alpha * step)
            obj[bad] = _column_objectives(A, Y[:, bad], R_new[:, bad], alpha)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Z = R_new + ((t - 1.0) / t_new) * (R_new - R)
        Z[:, bad] = R_new[:, bad]
        if np.any(bad):
            t_new = 1.0
        rel = np.max(np.abs(prev - obj) / np.maximum(np.abs(obj), 1e-300))
        R, prev, t = R_new, obj, t_new
        if rel < tol and it > 10:
            converged = True
            break
    R = _polish(A, Y, R, alpha)
    return (R[:, 0] if squeeze else R), converged


def _column_objectives(A, Y, R, alpha):
    res = A @ R - Y
    return np.sum(res * res, axis=0) + alpha * np.sum(np.abs(R), axis=0)


def _polish(A, Y, R, alpha):
    """Re-solve the optimality conditions on each trace's support.

    The candidate is kept only when its signs agree with the support pattern
    and it lowers the objective, so polishing can never hurt.
    """
    out = R.copy()
    for j in range(R.shape[1]):
        r = R[:, j]
        supp = np.flatnonzero(r)
        if supp.size == 0 or supp.size > A.shape[0]:
            continue
        s = np.sign(r[supp])
        As = A[:, supp]
        cand_s = np.linalg.lstsq(As.T @ As, As.T @ Y[:, j] - 0.5 * alpha * s, rcond=None)[0]
        if np.any(np.sign(cand_s) != s):
            continue
        cand = np.zeros_like(r)
        cand[supp] = cand_s
        if ssi_objective(A, Y[:, j], cand, alpha) <= ssi_objective(A, Y[:, j], r, alpha):
            out[:, j] = cand
    return out


def kkt_violation(A, y, r, alpha) -> float:
    """Largest violation of the l1 optimality conditions, relative to ``alpha``."""
    g = 2.0 * A.T @ (A @ r - y)
    on = r != 0
    v_on = np.abs(g[on] + alpha * np.sign(r[on]))
    v_off = np.maximum(np.abs(g[~on]) - alpha, 0.0)
    worst = max(v_on.max(initial=0.0), v_off.max(initial=0.0))
    return float(worst / alpha)


def sparse_spike_inversion(K, Y, alpha: float, baseline: float = 0.0, max_iter: int = 5000,
                           stall_tol: float = 1e-2):
    """Sparse spike inversion of every trace of ``Y``.

    Args:
        K: Trace operator (``ForwardOperator``, sparse or dense ``m_t x n_t``).
        Y: Seismic data, ``m_t x n_x`` (or a single trace).
        alpha: l1 weight on the reflectivity, positive.
        baseline: Impedance value of the first sample of every trace.
        max_iter: Iteration cap of the FISTA fallback.
        stall_tol: Relative optimality violation above which an unconverged
            solve raises SolverStalled.

    Returns:
        tuple: ``(impedance, reflectivity)`` grids.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    Kd = _trace_matrix(K)
    Y = np.asarray(Y, dtype=np.float64)
    single = Y.ndim == 1
    if single:
        Y = Y[:, None]
    if Y.shape[0] != Kd.shape[0]:
        raise DimensionMismatch(f"data has {Y.shape[0]} rows, operator produces {Kd.shape[0]}")
    n_t = Kd.shape[1]
    A = Kd @ integration_matrix(n_t)
    Yb = Y - baseline * (Kd @ np.ones(n_t))[:, None]
    R, converged = solve_l1(A, Yb, alpha, max_iter=max_iter)
    if not np.all(np.isfinite(R)):
        raise SolverStalled("sparse spike solve produced non-finite values")
    if not converged:
        worst = max(kkt_violation(A, Yb[:, j], R[:, j], alpha) for j in range(R.shape[1]))
        if worst > stall_tol:
            raise SolverStalled(f"sparse spike solve stalled (optimality violation {worst:.3g})")
    X = reflectivity_to_impedance(R, baseline)
    if single:
        return X[:, 0], R[:, 0]
    return X, R


def sparse_spike_trace(K, y_trace, alpha: float, baseline: float = 0.0) -> np.ndarray:
    """Impedance trace recovered by sparse spike inversion of one seismic trace."""
    return sparse_spike_inversion(K, np.asarray(y_trace, dtype=np.float64).ravel(), alpha, baseline)[0]
