"""Anisotropic TV inversion by split Bregman.

Minimizes ``|Y - K X|_F^2 + alpha |D_t X|_1 + beta |D_x X|_1`` where ``D_t``
differences along time (rows) and ``D_x`` across traces (columns), both with
the ``[1, -1]`` stencil. The quadratic subproblem is solved by conjugate
gradients, warm started from the previous iterate.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from ..errors import DimensionMismatch, NonFinite
from ..forward import ForwardOperator


def dt(X):
    return X[:-1] - X[1:]


def dt_adj(P):
    out = np.zeros((P.shape[0] + 1, P.shape[1]))
    out[:-1] += P
    out[1:] -= P
    return out


def dx(X):
    return X[:, :-1] - X[:, 1:]


def dx_adj(P):
    out = np.zeros((P.shape[0], P.shape[1] + 1))
    out[:, :-1] += P
    out[:, 1:] -= P
    return out


def _trace_op(K):
    return K.trace if isinstance(K, ForwardOperator) else K


def tv_objective(K, Y, X, alpha, beta):
    A = _trace_op(K)
    r = Y - A @ X
    return float(np.sum(r * r) + alpha * np.abs(dt(X)).sum() + beta * np.abs(dx(X)).sum())


def _cg(apply, rhs, x0, shape, tol, maxiter):
    n = rhs.size
    op = LinearOperator((n, n), matvec=lambda v: apply(v.reshape(shape)).ravel(), dtype=np.float64)
    sol, _ = cg(op, rhs.ravel(), x0=x0.ravel(), rtol=tol, atol=0.0, maxiter=maxiter)
    return sol.reshape(shape)


def least_squares_cg(K, Y, tol=1e-12, maxiter=None, x0=None):
    """Minimum-norm-from-zero CG solution of ``K^T K X = K^T Y``."""
    A = _trace_op(K)
    Y = np.asarray(Y, dtype=np.float64)
    shape = (A.shape[1], Y.shape[1])
    rhs = np.asarray(A.T @ Y)
    x0 = np.zeros(shape) if x0 is None else np.asarray(x0, dtype=np.float64)
    maxiter = maxiter or 10 * rhs.size
    return _cg(lambda X: np.asarray(A.T @ (A @ X)), rhs, x0, shape, tol, maxiter)


def split_bregman_2d(K, Y, alpha: float, beta: float, iters: int = 100, *, lam=None,
                     cg_tol: float = 1e-6, cg_maxiter: int = 50, x0=None, check_every: int = 5):
    """Split Bregman solution of the two-direction TV inversion.

    Args:
        K: Trace operator; ``ForwardOperator`` or an ``m_t x n_t`` matrix
            applied to every column.
        Y: Seismic grid ``m_t x n_x``.
        alpha: Weight of the time-difference l1 term.
        beta: Weight of the trace-difference l1 term.
        iters: Number of outer Bregman iterations.
        lam: Penalty on the splitting constraints. Defaults to
            ``max(alpha, beta)``.
        cg_tol: Relative tolerance of each inner CG solve.
        cg_maxiter: Inner CG iteration cap.
        x0: Optional starting grid.
        check_every: Objective monotonicity is checked at this period.

    Returns:
        ndarray: the reconstructed impedance grid ``n_t x n_x``.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    A = _trace_op(K)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"data has {Y.shape[0]} rows, operator produces {A.shape[0]}")
    shape = (A.shape[1], Y.shape[1])
    if alpha == 0 and beta == 0:
        return least_squares_cg(A, Y, x0=x0)

    lam = float(lam) if lam is not None else float(max(alpha, beta))
    AtY2 = 2.0 * np.asarray(A.T @ Y)
    AtA = (A.T @ A)

    def normal(X):
        return 2.0 * np.asarray(AtA @ X) + lam * (dt_adj(dt(X)) + dx_adj(dx(X)))

    X = np.zeros(shape) if x0 is None else np.array(x0, dtype=np.float64)
    Dt, Dx = dt(X), dx(X)
    Bt, Bx = np.zeros_like(Dt), np.zeros_like(Dx)
    last = tv_objective(A, Y, X, alpha, beta)
    for k in range(1, iters + 1):
        rhs = AtY2 + lam * (dt_adj(Dt - Bt) + dx_adj(Dx - Bx))
        X = _cg(normal, rhs, X, shape, cg_tol, cg_maxiter)
        if not np.all(np.isfinite(X)):
            raise NonFinite(f"split Bregman diverged at iteration {k}")
        gt, gx = dt(X), dx(X)
        Dt = _shrink(gt + Bt, alpha / lam)
        Dx = _shrink(gx + Bx, beta / lam)
        Bt += gt - Dt
        Bx += gx - Dx
        if check_every and k % check_every == 0:
            obj = tv_objective(A, Y, X, alpha, beta)
            if obj > last * (1 + 1e-6):
                warnings.warn(
                    f"split Bregman objective rose from {last:.6g} to {obj:.6g} at iteration {k}",
                    RuntimeWarning,
                    stacklevel=2,
                )
            last = obj
    return X


def _shrink(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def solve_residual_formulation(K, Y, x_cont, alpha: float, beta: float, iters: int = 100, **kw):
    """Background-plus-jumps inversion: TV-invert the data left unexplained by ``x_cont``."""
    A = _trace_op(K)
    Y = np.asarray(Y, dtype=np.float64)
    x_cont = np.asarray(x_cont, dtype=np.float64)
    if x_cont.shape != (A.shape[1], Y.shape[1]):
        raise DimensionMismatch(
            f"background grid {x_cont.shape} does not match {(A.shape[1], Y.shape[1])}"
        )
    residual = Y - np.asarray(A @ x_cont)
    x_jump = split_bregman_2d(A, residual, alpha, beta, iters, **kw)
    return x_jump + x_cont
