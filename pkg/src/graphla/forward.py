"""Convolutional forward model ``K = D_u W grad`` and wavelet utilities.

All time-axis operators act on one trace at a time. ``ForwardOperator.trace``
holds the per-trace matrix ``A`` (``m_t x n_t``); on a grid ``X`` the model is
simply ``A @ X`` and on the row-major flattened grid it is ``kron(A, I_nx)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateSpectrum, DimensionMismatch, IoFailure, MalformedHeader, WaveletTooLong


@dataclass(frozen=True)
class Wavelet:
    samples: np.ndarray
    dt: float
    peak_freq: float | None = None

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64).ravel()
        if s.size % 2 != 1:
            raise ValueError("wavelet length must be odd")
        if not np.all(np.isfinite(s)):
            raise ValueError("wavelet contains non-finite samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def half_width(self) -> int:
        return self.samples.size // 2

    def __len__(self):
        return self.samples.size


def ricker(peak_freq: float, dt: float, half_width: int) -> Wavelet:
    """Zero-phase Ricker wavelet sampled at ``t = (k - half_width) * dt``."""
    if not (peak_freq > 0 and dt > 0 and half_width >= 1):
        raise ValueError("need peak_freq > 0, dt > 0 and half_width >= 1")
    t = (np.arange(2 * half_width + 1) - half_width) * dt
    a = (np.pi * peak_freq * t) ** 2
    return Wavelet((1.0 - 2.0 * a) * np.exp(-a), dt=dt, peak_freq=peak_freq)


def time_difference_operator(n_t: int) -> sp.csr_matrix:
    """``(n_t - 1) x n_t`` forward difference with rows ``[1, -1]``."""
    if n_t < 2:
        raise ValueError("n_t must be at least 2")
    m = n_t - 1
    return sp.diags([np.ones(m), -np.ones(m)], [0, 1], shape=(m, n_t), format="csr")


def convolution_matrix(samples, n: int) -> sp.csr_matrix:
    """``n x n`` matrix of 'same'-length convolution with zero boundary."""
    w = np.asarray(samples, dtype=np.float64)
    c = w.size // 2
    # out[i] = sum_k w[k] * in[i + c - k]  ->  diagonal offset c - k
    offsets = [c - k for k in range(w.size) if abs(c - k) < n]
    diags = [np.full(n - abs(off), w[c - off]) for off in offsets]
    return sp.diags(diags, offsets, shape=(n, n), format="csr")


def decimation_matrix(n: int, u: int) -> sp.csr_matrix:
    """Row selector keeping rows ``0, u, 2u, ...`` of an ``n``-row signal."""
    keep = np.arange(0, n, u)
    return sp.csr_matrix((np.ones(keep.size), (np.arange(keep.size), keep)), shape=(keep.size, n))


def output_rows(n_t: int, u: int) -> int:
    return len(range(0, n_t - 1, u))


@dataclass(frozen=True)
class ForwardOperator:
    trace: sp.csr_matrix
    n_t: int
    undersample: int = 1
    wavelet: Wavelet | None = None

    @property
    def m_t(self) -> int:
        return self.trace.shape[0]

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n_t:
            raise DimensionMismatch(f"grid has {x.shape[0]} rows, operator expects {self.n_t}")
        return np.asarray(self.trace @ x)

    def adjoint(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape[0] != self.m_t:
            raise DimensionMismatch(f"data has {y.shape[0]} rows, operator produces {self.m_t}")
        return np.asarray(self.trace.T @ y)

    def matrix(self, n_x: int) -> sp.csr_matrix:
        """Operator on row-major flattened ``n_t x n_x`` grids."""
        return sp.kron(self.trace, sp.identity(n_x), format="csr")

    def scaled(self, factor: float) -> "ForwardOperator":
        w = None
        if self.wavelet is not None:
            w = Wavelet(self.wavelet.samples * factor, self.wavelet.dt, self.wavelet.peak_freq)
        return ForwardOperator((self.trace * factor).tocsr(), self.n_t, self.undersample, w)


def build_forward(wavelet: Wavelet, n_t: int, undersample: int = 1) -> ForwardOperator:
    if undersample < 1:
        raise ValueError("undersample factor must be >= 1")
    if len(wavelet) >= n_t:
        raise WaveletTooLong(f"wavelet of length {len(wavelet)} for n_t={n_t}")
    grad = time_difference_operator(n_t)
    conv = convolution_matrix(wavelet.samples, n_t - 1)
    dec = decimation_matrix(n_t - 1, undersample)
    a = (dec @ conv @ grad).tocsr()
    a.eliminate_zeros()
    return ForwardOperator(a, n_t, undersample, wavelet)


def apply_functional(wavelet: Wavelet, x, undersample: int = 1) -> np.ndarray:
    """Reference path ``decimate(convolve(diff(x)))`` without matrix assembly."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    d = x[:-1] - x[1:]
    w = wavelet.samples
    c = w.size // 2
    full = np.stack([np.convolve(d[:, j], w) for j in range(d.shape[1])], axis=1)
    same = full[c : c + d.shape[0]]
    return same[::undersample]


def fit_operator(x_train, y_train, ridge: float = 1e-6) -> np.ndarray:
    """Dense trace operator ``A`` minimizing ``|A X - Y|^2 + ridge |A|^2``.

    Columns of ``x_train`` / ``y_train`` are paired impedance / seismic traces.
    """
    x = np.asarray(x_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.float64)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch("training grids need the same number of traces")
    gram = x @ x.T + ridge * np.eye(x.shape[0])
    return np.linalg.solve(gram, x @ y.T).T


def estimate_wavelet(seismic, length: int, norm_peak: float = 1.0, dt: float = 1.0) -> Wavelet:
    """Zero-phase wavelet estimate from the trace-averaged amplitude spectrum."""
    y = np.asarray(seismic, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.size == 0:
        raise ValueError("empty seismic section")
    if length % 2 != 1 or length > y.shape[0]:
        raise ValueError("length must be odd and no longer than a trace")
    spectrum = np.abs(np.fft.fft(y, axis=0)).mean(axis=1)
    if not np.any(spectrum > 0):
        raise DegenerateSpectrum("seismic section has an all-zero spectrum")
    signal = np.fft.fftshift(np.real(np.fft.ifft(spectrum)))
    centre = y.shape[0] // 2
    half = length // 2
    w = signal[centre - half : centre + half + 1]
    peak = np.max(np.abs(w))
    if peak == 0:
        raise DegenerateSpectrum("estimated wavelet vanishes on its support")
    return Wavelet(w * (norm_peak / peak), dt=dt)


def save_wavelet(wavelet: Wavelet, path) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(f"# dt={wavelet.dt!r}\n")
            for v in wavelet.samples:
                fh.write(f"{float(v)!r}\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_wavelet(path) -> Wavelet:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if not lines or not lines[0].startswith("# dt="):
        raise MalformedHeader("wavelet file must start with '# dt=<seconds>'")
    dt = float(lines[0][5:])
    vals = [float(tok) for line in lines[1:] for tok in line.split(",") if tok.strip()]
    return Wavelet(np.array(vals), dt=dt)
