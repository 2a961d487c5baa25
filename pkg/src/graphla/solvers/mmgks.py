"""Majorization-minimization in a generalized Krylov subspace (MMGKS).

Approximately minimizes

    J(x) = 1/2 |K x - y|^2 + alpha * |L x|_1

by iteratively reweighted least squares. At the current iterate ``x_k`` the
smoothed l1 term ``sum sqrt((L x)_i^2 + eps^2)`` is majorized by the weighted
quadratic ``1/2 sum w_i (L x)_i^2`` with ``w_i = ((L x_k)_i^2 + eps^2)^(-1/2)``.
Each quadratic is solved exactly on a small orthonormal basis ``V``, which is
then enlarged with the (orthogonalized) residual of the full normal equations.

With a noise bound ``delta`` the regularization parameter is re-selected at
every sweep by the discrepancy principle, using the closed form residual of
the projected problem.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import aslinearoperator

from ..errors import DimensionMismatch, NonFinite

BRACKET_EXHAUSTED = "bracket_exhausted"
NOISELESS_FIXED_ALPHA = "noiseless_fixed_alpha"


@dataclass(frozen=True)
class MmgksConfig:
    subspace_dim: int = 50
    eps: float = 1e-4  # relative to max|y|
    max_inner_sweeps: int = 30
    discrepancy_tau: float = 1.01
    alpha_bracket: tuple = (1e-8, 1e4)  # relative to |K^T y|_inf
    tol: float = 1e-6
    restart_keep: int = 5

    def __post_init__(self):
        if self.subspace_dim < 2:
            raise ValueError("subspace_dim must be >= 2")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.discrepancy_tau > 1:
            raise ValueError("discrepancy_tau must exceed 1")
        lo, hi = self.alpha_bracket
        if not 0 < lo < hi:
            raise ValueError("alpha_bracket must satisfy 0 < lo < hi")
        if self.max_inner_sweeps < 1:
            raise ValueError("max_inner_sweeps must be positive")


@dataclass
class L2L1Problem:
    K: object
    y: np.ndarray
    L: object
    delta: float = 0.0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.K.shape[0] != self.y.size:
            raise DimensionMismatch(f"K has {self.K.shape[0]} rows, y has {self.y.size}")
        if self.L.shape[1] != self.K.shape[1]:
            raise DimensionMismatch("K and L act on spaces of different size")
        if not self.delta >= 0:
            raise ValueError("delta must be nonnegative")


@dataclass
class SolveReport:
    x: np.ndarray
    alpha: float
    residual_norm: float
    sweeps_used: int
    subspace_dim_final: int
    flags: list = field(default_factory=list)

    @property
    def bracket_exhausted(self) -> bool:
        return BRACKET_EXHAUSTED in self.flags

    def to_record(self) -> dict:
        return {
            "alpha": self.alpha,
            "residual_norm": self.residual_norm,
            "sweeps": self.sweeps_used,
            "subspace_dim": self.subspace_dim_final,
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def objective(K, L, y, x, alpha, eps=0.0):
    """``1/2 |Kx - y|^2 + alpha * sum sqrt((Lx)^2 + eps^2)``; eps=0 gives the l1 form."""
    r = K @ x - y
    u = L @ x
    reg = np.sum(np.abs(u)) if eps == 0 else np.sum(np.sqrt(u * u + eps * eps))
    return 0.5 * float(r @ r) + alpha * float(reg)


class _Projected:
    """Projected weighted least-squares problem on the current basis.

    For ``A = K V`` and ``B = sqrt(w) * L V`` the minimizer of
    ``|A z - y|^2 + alpha |B z|^2`` is available for every ``alpha`` in
    closed form. With ``[A; B] = Q R`` and the eigendecomposition
    ``Q_A^T Q_A = W diag(s) W^T`` the problem decouples in ``t = W^T R z``.
    """

    def __init__(self, A, B, y):
        k = A.shape[1]
        q, self.R = np.linalg.qr(np.vstack([A, B]))
        qa = q[: A.shape[0]]
        s, self.W = np.linalg.eigh(qa.T @ qa)
        self.s = np.clip(s, 0.0, 1.0)
        self.g = self.W.T @ (qa.T @ y)
        self.yy = float(y @ y)
        diag = np.abs(np.diag(self.R))
        self.full_rank = k == 0 or diag.min() > 1e-12 * max(diag.max(), 1e-300)

    def coeffs(self, alpha):
        den = self.s + alpha * (1.0 - self.s)
        t = np.zeros_like(self.g)
        ok = den > 1e-300
        t[ok] = self.g[ok] / den[ok]
        return t

    def residual(self, alpha) -> float:
        t = self.coeffs(alpha)
        r2 = float(np.sum(self.s * t * t) - 2.0 * np.sum(self.g * t) + self.yy)
        return math.sqrt(max(r2, 0.0))

    def solve(self, alpha):
        w = self.W @ self.coeffs(alpha)
        if self.full_rank:
            return sla.solve_triangular(self.R, w)
        return np.linalg.lstsq(self.R, w, rcond=None)[0]


def _discrepancy_alpha(proj, delta, tau, lo, hi, max_bisect=200):
    """Return ``(alpha, exhausted)`` with residual in ``[delta, tau*delta]``."""
    r_lo, r_hi = proj.residual(lo), proj.residual(hi)
    if r_lo > tau * delta:
        return lo, True
    if r_hi < delta:
        return hi, True
    if r_lo >= delta:
        return lo, False
    if r_hi <= tau * delta:
        return hi, False
    a, b = math.log(lo), math.log(hi)
    mid = 0.5 * (a + b)
    for _ in range(max_bisect):
        mid = 0.5 * (a + b)
        r = proj.residual(math.exp(mid))
        if r < delta:
            a = mid
        elif r > tau * delta:
            b = mid
        else:
            return math.exp(mid), False
    alpha = math.exp(mid)
    r = proj.residual(alpha)
    return alpha, not (delta <= r <= tau * delta)


def _orthonormalize(V, v, passes=2):
    for _ in range(passes):
        if V.shape[1]:
            v = v - V @ (V.T @ v)
    return v, float(np.linalg.norm(v))


def mmgks_solve(problem: L2L1Problem, cfg: MmgksConfig | None = None, *, alpha=None, x0=None) -> SolveReport:
    """Solve the l2-l1 problem; ``alpha=None`` selects it by the discrepancy principle.

    Args:
        problem: Operators, data and noise bound.
        cfg: Solver tunables.
        alpha: Fixed regularization parameter. Disables the discrepancy rule.
        x0: Optional warm start. It seeds the IRLS weights and is added to
            the initial basis.

    Returns:
        SolveReport with the final iterate and the parameters used.
    """
    cfg = cfg or MmgksConfig()
    K = aslinearoperator(problem.K)
    L = aslinearoperator(problem.L)
    y = problem.y
    n = K.shape[1]
    flags = []

    kty = K.rmatvec(y)
    scale = float(np.max(np.abs(kty))) if kty.size else 0.0
    y_max = float(np.max(np.abs(y))) if y.size else 0.0
    eps = cfg.eps * (y_max if y_max > 0 else 1.0)

    if scale == 0.0:
        x = np.zeros(n)
        return SolveReport(x, 0.0 if alpha is None else float(alpha), float(np.linalg.norm(y)), 0, 0, flags)

    fixed = alpha is not None
    if not fixed and problem.delta == 0:
        alpha = 1e-6 * scale
        fixed = True
        flags.append(NOISELESS_FIXED_ALPHA)
    lo, hi = cfg.alpha_bracket[0] * scale, cfg.alpha_bracket[1] * scale

    V = np.empty((n, 0))
    for v in ([kty] if x0 is None else [kty, np.asarray(x0, dtype=np.float64).ravel()]):
        v, nv = _orthonormalize(V, v)
        if nv > 1e-12 * max(np.linalg.norm(v), 1.0) and nv > 0:
            V = np.column_stack([V, v / nv])
    KV = np.column_stack([K.matvec(V[:, i]) for i in range(V.shape[1])])
    LV = np.column_stack([L.matvec(V[:, i]) for i in range(V.shape[1])])

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).ravel().copy()
    lx = L.matvec(x)
    exhausted = False
    sweeps = 0
    cur_alpha = float(alpha) if fixed else lo
    for sweeps in range(1, cfg.max_inner_sweeps + 1):
        w = 1.0 / np.sqrt(lx * lx + eps * eps)
        proj = _Projected(KV, np.sqrt(w)[:, None] * LV, y)
        if fixed:
            cur_alpha, exhausted = float(alpha), False
        else:
            cur_alpha, exhausted = _discrepancy_alpha(
                proj, problem.delta, cfg.discrepancy_tau, lo, hi
            )
        z = proj.solve(cur_alpha)
        x_new = V @ z
        if not np.all(np.isfinite(x_new)):
            raise NonFinite(f"iterate became non-finite at sweep {sweeps}")
        kx = KV @ z
        lx = LV @ z
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-300)
        x = x_new
        if change < cfg.tol and sweeps > 1:
            break
        if sweeps == cfg.max_inner_sweeps:
            break

        grad = K.rmatvec(kx - y) + cur_alpha * L.rmatvec(w * lx)
        gnorm = float(np.linalg.norm(grad))
        v, nv = _orthonormalize(V, grad)
        if nv <= 1e-12 * max(gnorm, 1e-300) or nv == 0:
            continue
        v /= nv
        if V.shape[1] >= cfg.subspace_dim:
            V, KV, LV = _compress(V, KV, LV, z, cfg.restart_keep)
            v, nv = _orthonormalize(V, v)
            v /= nv
        V = np.column_stack([V, v])
        KV = np.column_stack([KV, K.matvec(v)])
        LV = np.column_stack([LV, L.matvec(v)])

    if exhausted:
        flags.append(BRACKET_EXHAUSTED)
    residual = float(np.linalg.norm(K.matvec(x) - y))
    return SolveReport(x, float(cur_alpha), residual, sweeps, V.shape[1], flags)


def _compress(V, KV, LV, z, keep):
    """Shrink the basis to the current solution plus the newest ``keep`` vectors."""
    k = V.shape[1]
    coeff = np.zeros((k, keep + 1))
    coeff[:, 0] = z
    tail = np.arange(max(0, k - keep), k)
    coeff[tail, np.arange(1, tail.size + 1)] = 1.0
    coeff = coeff[:, : tail.size + 1]
    q, r = np.linalg.qr(coeff)
    good = np.abs(np.diag(r)) > 1e-12 * np.abs(np.diag(r)).max()
    q = q[:, good]
    return V @ q, KV @ q, LV @ q
