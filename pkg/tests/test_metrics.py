import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphla.errors import AllFlatTruth, DimensionMismatch, GridTooSmall, IdenticalInputs, ZeroVariance
from graphla.metrics import SsimConfig, add_noise_to_psnr, d_mse, psnr, ssim


def brute_ssim(a, b, w=11, c1=1e-4, c2=3e-4):
    a = (a - a.mean()) / a.std()
    b = (b - b.mean()) / b.std()
    vals = []
    for i in range(a.shape[0] - w + 1):
        for j in range(a.shape[1] - w + 1):
            pa = a[i : i + w, j : j + w].ravel()
            pb = b[i : i + w, j : j + w].ravel()
            c = np.cov(pa, pb, ddof=1)
            ma, mb = pa.mean(), pb.mean()
            vals.append((2 * ma * mb + c1) * (2 * c[0, 1] + c2) / ((ma**2 + mb**2 + c1) * (c[0, 0] + c[1, 1] + c2)))
    return float(np.mean(vals))


def test_dmse_hand_value():
    assert d_mse(np.array([[0.0], [0.0], [0.0]]), np.array([[0.0], [1.0], [1.0]])) == 1.0


def test_dmse_identity_and_flat():
    x = np.random.default_rng(0).standard_normal((6, 3))
    assert d_mse(x, x) == 0.0
    with pytest.raises(AllFlatTruth):
        d_mse(x, np.ones((6, 3)))
    with pytest.raises(DimensionMismatch):
        d_mse(x, x[:5])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-50, 50))
def test_dmse_properties(seed, c):
    rng = np.random.default_rng(seed)
    x, t = rng.standard_normal((2, 7, 4))
    assert d_mse(x, t) >= 0
    assert d_mse(x + c, t + c) == pytest.approx(d_mse(x, t), rel=1e-9, abs=1e-9)


def test_ssim_identity_and_affine():
    a = np.random.default_rng(1).standard_normal((20, 15))
    assert abs(ssim(a, a) - 1.0) <= 1e-12
    assert abs(ssim(a, 5 * a + 3) - 1.0) <= 1e-12


def test_ssim_matches_brute_force():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal((2, 32, 32))
    b = 0.6 * a + b
    assert abs(ssim(a, b) - brute_ssim(a, b)) <= 1e-10


def test_ssim_matches_skimage_uniform():
    skm = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal((2, 24, 30))
    an, bn = (a - a.mean()) / a.std(), (b - b.mean()) / b.std()
    ref = skm.structural_similarity(
        an, bn, win_size=11, data_range=1.0, K1=1e-2, K2=np.sqrt(3e-4),
        gaussian_weights=False, use_sample_covariance=True,
    )
    assert abs(ssim(a, b) - ref) <= 1e-10


def test_ssim_errors():
    with pytest.raises(GridTooSmall):
        ssim(np.random.rand(10, 20), np.random.rand(10, 20))
    with pytest.raises(ZeroVariance):
        ssim(np.ones((12, 12)), np.random.rand(12, 12))
    with pytest.raises(ValueError):
        SsimConfig(window=4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_ssim_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 14, 13))
    s = ssim(a, b)
    assert abs(s - ssim(b, a)) <= 1e-12
    assert -1 - 1e-9 <= s <= 1 + 1e-9


def test_psnr_values():
    clean = np.zeros((10, 10))
    clean[0, 0] = 1.0
    noisy = clean + np.sqrt(1e-3)
    assert psnr(clean, noisy) == pytest.approx(30.0, abs=1e-12)
    noisy10 = clean + 10 * np.sqrt(1e-3)
    assert psnr(clean, noisy) - psnr(clean, noisy10) == pytest.approx(20.0, abs=1e-12)
    with pytest.raises(IdenticalInputs):
        psnr(clean, clean)


def test_add_noise_contract():
    clean = np.sin(np.linspace(0, 9, 300)).reshape(30, 10)
    noisy, delta = add_noise_to_psnr(clean, 30.0, seed=5)
    assert 29.9 <= psnr(clean, noisy) <= 30.1
    assert delta == np.linalg.norm(noisy - clean)
    again, _ = add_noise_to_psnr(clean, 30.0, seed=5)
    assert np.array_equal(noisy, again)
    _, d27 = add_noise_to_psnr(clean, 27.0, seed=5)
    _, d39 = add_noise_to_psnr(clean, 39.0, seed=5)
    assert d27 > d39
