"""Image-induced graphs and their Laplacians.

Every pixel of a guide image is a node. Two pixels ``p != q`` are joined when
their grid distance is at most ``R``, with weight

    w(p, q) = exp(-|g(p) - g(q)|**2 / sigma)

and the Laplacian acts as ``(L z)(p) = sum_{q ~ p} w(p, q) * (z(p) - z(q))``.
Nodes are numbered row-major, ``(i, j) -> i * n_x + j``, the same convention as
``ndarray.ravel()``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import DimensionMismatch, OutOfBounds
from .grid import digest, normalize


class Dist(str, enum.Enum):
    L1 = "L1"
    LINF = "Linf"


@dataclass(frozen=True)
class GraphSpec:
    radius: float = 2.0
    sigma: float = 0.25
    dist: Dist = Dist.LINF
    normalize_guide: bool = True

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "dist", Dist(self.dist))


@dataclass(frozen=True)
class GraphLaplacian:
    matrix: sp.csr_matrix
    spec: GraphSpec
    guide_hash: str
    shape: tuple

    def __matmul__(self, z):
        return self.matrix @ z


def _distance(di, dj, dist):
    if dist is Dist.L1:
        return abs(di) + abs(dj)
    return max(abs(di), abs(dj))


def stencil(spec: GraphSpec):
    """Offsets ``(di, dj)`` with ``0 < dist <= R``, one per unordered pair.

    Only the half-plane ``di > 0 or (di == 0 and dj > 0)`` is returned; the
    mirrored offsets produce the same edges.
    """
    r = int(np.floor(spec.radius))
    out = []
    for di in range(0, r + 1):
        for dj in range(-r, r + 1):
            if di == 0 and dj <= 0:
                continue
            d = _distance(di, dj, spec.dist)
            if 0 < d <= spec.radius:
                out.append((di, dj))
    return out


def _prepare_guide(guide, spec):
    g = np.asarray(guide, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    if g.ndim != 2:
        raise DimensionMismatch("guide must be a 2D grid")
    if not np.all(np.isfinite(g)):
        raise ValueError("guide contains non-finite values")
    if spec.normalize_guide:
        g = normalize(g)[0]
    return g


def edge_weight(guide, p, q, spec: GraphSpec) -> float:
    """Weight of the edge between pixels ``p`` and ``q`` (each ``(row, col)``).

    The guide is used as given; normalize it beforehand if ``spec`` asks for it.
    """
    g = np.asarray(guide, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    for pix in (p, q):
        if not (0 <= pix[0] < g.shape[0] and 0 <= pix[1] < g.shape[1]):
            raise OutOfBounds(f"pixel {pix} outside grid of shape {g.shape}")
    d = _distance(p[0] - q[0], p[1] - q[1], spec.dist)
    if d == 0 or d > spec.radius:
        return 0.0
    diff = g[p] - g[q]
    return float(np.exp(-diff * diff / spec.sigma))


def build_adjacency(guide, spec: GraphSpec) -> sp.csr_matrix:
    """Symmetric weighted adjacency matrix of the graph induced by ``guide``."""
    g = _prepare_guide(guide, spec)
    n_t, n_x = g.shape
    idx = np.arange(n_t * n_x).reshape(n_t, n_x)
    rows, cols, vals = [], [], []
    for di, dj in stencil(spec):
        if di >= n_t or abs(dj) >= n_x:
            continue
        j0, j1 = max(0, -dj), min(n_x, n_x - dj)
        a = g[: n_t - di, j0:j1]
        b = g[di:, j0 + dj : j1 + dj]
        w = np.exp(-((a - b) ** 2) / spec.sigma)
        rows.append(idx[: n_t - di, j0:j1].ravel())
        cols.append(idx[di:, j0 + dj : j1 + dj].ravel())
        vals.append(w.ravel())
    n = n_t * n_x
    if not rows:
        return sp.csr_matrix((n, n))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    upper = sp.coo_matrix((v, (r, c)), shape=(n, n))
    return (upper + upper.T).tocsr()


def build_laplacian(guide, spec: GraphSpec | None = None) -> GraphLaplacian:
    spec = spec or GraphSpec()
    g = np.asarray(guide, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    adj = build_adjacency(g, spec)
    degree = np.asarray(adj.sum(axis=1)).ravel()
    lap = (sp.diags(degree) - adj).tocsr()
    lap.sort_indices()
    return GraphLaplacian(matrix=lap, spec=spec, guide_hash=digest(g), shape=g.shape)


def apply_laplacian(lap: GraphLaplacian, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    n = lap.matrix.shape[1]
    if z.size != n:
        raise DimensionMismatch(f"vector of length {z.size} for a {n}-node graph")
    return lap.matrix @ z.ravel()


def export_matrix_market(lap: GraphLaplacian, path) -> None:
    scipy.io.mmwrite(str(path), lap.matrix, comment=f"guide {lap.guide_hash}")
