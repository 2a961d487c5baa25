import warnings

import numpy as np
import pytest

from graphla.errors import DimensionMismatch
from graphla.forward import Wavelet, build_forward, ricker, time_difference_operator
from graphla.grid import normalize
from graphla.phantom import PhantomSpec, make_phantom
from graphla.solvers.split_bregman import (
    dt,
    dt_adj,
    dx,
    dx_adj,
    least_squares_cg,
    solve_residual_formulation,
    split_bregman_2d,
    tv_objective,
)
from graphla.solvers.ssi import integration_matrix, sparse_spike_inversion, sparse_spike_trace, ssi_objective


def test_integration_inverts_gradient():
    G = integration_matrix(6)
    np.testing.assert_allclose(time_difference_operator(6) @ G, np.eye(5))


def test_zero_data_gives_baseline():
    K = build_forward(ricker(30, 0.002, 5), 30, 2)
    x = sparse_spike_trace(K, np.zeros(K.m_t), alpha=0.5, baseline=1.25)
    np.testing.assert_array_equal(x, 1.25)


@pytest.mark.parametrize("seed", range(6))
def test_ssi_objective_matches_convex_oracle(seed):
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(seed)
    Kd = rng.standard_normal((15, 20)) if seed % 2 else build_forward(ricker(40, 0.004, 3), 20, 1).trace.toarray()
    y = Kd @ np.cumsum(rng.standard_normal(20) * (rng.random(20) < 0.3)) + 0.05 * rng.standard_normal(Kd.shape[0])
    alpha = 0.3
    x, r = sparse_spike_inversion(Kd, y, alpha)
    A = Kd @ integration_matrix(20)
    var = cp.Variable(19)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(A @ var - y) + alpha * cp.norm1(var)))
    prob.solve()
    ref = ssi_objective(A, y, var.value, alpha)
    ours = ssi_objective(A, y, r, alpha)
    assert ours <= ref * (1 + 1e-6)
    assert abs(ours - ref) <= 1e-6 * ref or ours < ref


def test_two_spike_recovery():
    n_t = 80
    K = build_forward(ricker(30, 0.002, 12), n_t, 1)
    x_true = np.zeros(n_t)
    x_true[25:] -= 1.0
    x_true[52:] += 0.6
    y = K.apply(x_true[:, None])[:, 0]
    x, r = sparse_spike_inversion(K, y, alpha=1e-3)
    big = np.flatnonzero(np.abs(r) > 0.05)
    np.testing.assert_array_equal(big, [24, 51])
    np.testing.assert_allclose(r[big], [1.0, -0.6], rtol=0.05)


def test_stronger_alpha_is_sparser():
    truth = normalize(make_phantom(PhantomSpec(n_t=64, n_x=8, n_layers=5, seed=1)))[0]
    K = build_forward(ricker(30, 0.002, 10), 64, 1)
    y = K.apply(truth)
    _, r1 = sparse_spike_inversion(K, y, 1.0)
    _, r15 = sparse_spike_inversion(K, y, 15.0)
    assert np.count_nonzero(r15) < np.count_nonzero(r1)


def test_ssi_dimension_check():
    K = build_forward(ricker(30, 0.002, 5), 30, 2)
    with pytest.raises(DimensionMismatch):
        sparse_spike_inversion(K, np.zeros((K.m_t + 1, 2)), 1.0)
    with pytest.raises(ValueError):
        sparse_spike_inversion(K, np.zeros((K.m_t, 2)), 0.0)


def test_difference_adjoints():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((7, 5))
    P, Q = rng.standard_normal((6, 5)), rng.standard_normal((7, 4))
    assert np.sum(dt(X) * P) == pytest.approx(np.sum(X * dt_adj(P)))
    assert np.sum(dx(X) * Q) == pytest.approx(np.sum(X * dx_adj(Q)))


def small_operator():
    return build_forward(Wavelet([0.25, 1.0, 0.25], 1.0), 12, 1)


def test_no_regularization_is_least_squares():
    rng = np.random.default_rng(1)
    K = small_operator()
    Y = rng.standard_normal((K.m_t, 5))
    X = split_bregman_2d(K, Y, 0.0, 0.0)
    ref = np.linalg.pinv(K.trace.toarray()) @ Y
    assert np.linalg.norm(X - ref) <= 1e-6 * np.linalg.norm(ref)
    np.testing.assert_allclose(least_squares_cg(K, Y), X, atol=1e-9)


def test_tv_denoising_contracts_tv():
    rng = np.random.default_rng(2)
    clean = np.zeros((32, 16))
    clean[10:, :] = 1.0
    clean[20:, 8:] = -0.5
    noisy = clean + 0.2 * rng.standard_normal(clean.shape)
    eye = np.eye(32)
    X = split_bregman_2d(eye, noisy, 0.5, 0.5, iters=60)

    def tv(Z):
        return np.abs(dt(Z)).sum() + np.abs(dx(Z)).sum()

    assert tv(X) < tv(noisy)


def test_subgradient_optimality_small():
    rng = np.random.default_rng(3)
    A = np.eye(6)
    Y = np.repeat([[0.0], [1.0], [1.0]], 2, axis=0) @ np.ones((1, 4)) + 0.1 * rng.standard_normal((6, 4))
    alpha, beta = 0.3, 0.2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        X = split_bregman_2d(A, Y, alpha, beta, iters=3000, cg_tol=1e-12, cg_maxiter=200)
    # recover the subgradient from a dual-feasible projection
    cp = pytest.importorskip("cvxpy")
    var = cp.Variable((6, 4))
    obj = cp.sum_squares(Y - A @ var) + alpha * cp.sum(cp.abs(var[:-1] - var[1:])) + beta * cp.sum(cp.abs(var[:, :-1] - var[:, 1:]))
    cp.Problem(cp.Minimize(obj)).solve()
    ref = tv_objective(A, Y, var.value, alpha, beta)
    assert tv_objective(A, Y, X, alpha, beta) <= ref * (1 + 1e-3)
    scale = np.linalg.norm(A.T @ Y)
    assert np.linalg.norm(X - var.value) <= 1e-3 * scale


def test_heavier_regularization_fits_worse():
    truth = normalize(make_phantom(PhantomSpec(n_t=48, n_x=16, n_layers=4, seed=2)))[0]
    K = build_forward(ricker(30, 0.002, 8), 48, 2)
    Y = K.apply(truth)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        X1 = split_bregman_2d(K, Y, 1.0, 1.0, iters=80)
        X40 = split_bregman_2d(K, Y, 40.0, 40.0, iters=80)
    misfit = lambda X: np.sum((Y - K.apply(X)) ** 2)
    assert misfit(X40) > misfit(X1)


def test_residual_formulation():
    rng = np.random.default_rng(4)
    K = build_forward(ricker(30, 0.002, 6), 40, 2)
    x_cont = np.outer(np.linspace(1, 3, 40), np.ones(6)) + 0.05 * rng.standard_normal((40, 6))
    Y = K.apply(x_cont)
    out = solve_residual_formulation(K, Y, x_cont, 200.0, 200.0, iters=20)
    assert np.linalg.norm(out - x_cont) <= 1e-3 * np.linalg.norm(x_cont)
    Y2 = Y + 0.1 * rng.standard_normal(Y.shape)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zero_bg = solve_residual_formulation(K, Y2, np.zeros((40, 6)), 1.0, 1.0, iters=20)
        direct = split_bregman_2d(K, Y2, 1.0, 1.0, iters=20)
    np.testing.assert_array_equal(zero_bg, direct)
    with pytest.raises(DimensionMismatch):
        solve_residual_formulation(K, Y, np.zeros((39, 6)), 1.0, 1.0)
