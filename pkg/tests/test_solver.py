import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beamtrain.channel import NOISELESS
from beamtrain.codebook import build_dft_codebook, build_polar_codebook, codeword_at
from beamtrain.errors import ConfigError, DimensionError
from beamtrain.geometry import ArrayGeometry
from beamtrain.solver import (
    LassoConfig,
    default_lasso_weight,
    gram_pinv,
    kkt_residual,
    lasso_objective,
    lasso_solve,
    reconstruct_lasso,
    reconstruct_ls,
    reconstruct_orthonormal,
)
from beamtrain.sweep import FeedbackReport, beam_sweep, select_top_k

from .conftest import crandn

ALGOS = ("coordinate_descent", "ista", "fista")
G16 = ArrayGeometry.half_wavelength(16, 3e-3)


def _report(h, cb, K, noise=NOISELESS, rng=None):
    rep = select_top_k(beam_sweep(h, cb, noise, rng), K)
    return rep, cb.subset(rep.indices)


# ---- orthonormal and least squares ---------------------------------------


def test_single_dft_beam_exact(geom64):
    cb = build_dft_codebook(geom64)
    h = (0.7 + 0.2j) * cb.columns[:, 11]
    rep, sub = _report(h, cb, 1)
    assert np.allclose(reconstruct_orthonormal(sub, rep).h_hat, h, atol=1e-15)


def test_full_dft_basis_is_complete(geom64, rng):
    cb = build_dft_codebook(geom64)
    h = crandn(rng, 64)
    rep, sub = _report(h, cb, 64)
    assert np.linalg.norm(reconstruct_orthonormal(sub, rep).h_hat - h) < 1e-10


def test_orthonormal_projector_oracle(geom64, rng):
    cb = build_dft_codebook(geom64)
    h = crandn(rng, 64)
    rep, sub = _report(h, cb, 2)
    # projector built from an independent QR of the two columns
    q, _ = np.linalg.qr(sub)
    assert np.allclose(reconstruct_orthonormal(sub, rep).h_hat, q @ (q.conj().T @ h), atol=1e-12)


def test_ls_matches_orthonormal_for_dft(geom64, rng):
    cb = build_dft_codebook(geom64)
    rep, sub = _report(crandn(rng, 64), cb, 9)
    a = reconstruct_orthonormal(sub, rep).h_hat
    b = reconstruct_ls(sub, rep).h_hat
    assert np.linalg.norm(a - b) < 1e-10


def test_ls_recovers_consistent_coefficients(geom64, rng):
    sub = np.column_stack([codeword_at(geom64, t, r) for t, r in [(-0.5, 2.0), (0.1, None), (0.6, 4.0)]])
    alpha = crandn(rng, 3)
    h = sub @ alpha
    rep = FeedbackReport(np.arange(3), h.conj() @ sub)
    res = reconstruct_ls(sub, rep)
    assert np.abs(res.alpha - alpha).max() < 1e-8
    assert res.flags == []


def test_duplicate_column_minimum_norm_oracle(geom64, rng):
    v1, v2 = codeword_at(geom64, 0.2, 3.0), codeword_at(geom64, -0.4, None)
    sub = np.column_stack([v1, v1, v2])
    h = crandn(rng, 64)
    rep = FeedbackReport(np.arange(3), h.conj() @ sub)
    res = reconstruct_ls(sub, rep)
    gram = sub.conj().T @ sub
    oracle, *_ = np.linalg.lstsq(gram, rep.target, rcond=None)
    assert np.allclose(res.alpha, oracle, atol=1e-10)
    assert res.alpha[0] == pytest.approx(res.alpha[1], abs=1e-12)
    assert np.allclose(res.h_hat, sub @ oracle, atol=1e-10)
    assert res.flags == ["rank_truncated:1"]


def test_gram_pinv_identity():
    pinv, dropped = gram_pinv(np.eye(4, dtype=complex))
    assert np.allclose(pinv, np.eye(4)) and dropped == 0


# ---- LASSO ----------------------------------------------------------------


def _random_problem(rng, k=8, n=12):
    a = crandn(rng, n, k)
    return a, crandn(rng, n)


@pytest.mark.parametrize("algo", ALGOS)
def test_zero_weight_matches_ls(rng, algo):
    sub = np.column_stack([codeword_at(G16, t, None) for t in np.linspace(-0.9, 0.9, 6)])
    gram = sub.conj().T @ sub
    b = crandn(rng, 6)
    sol = lasso_solve(gram, b, LassoConfig(algorithm=algo, tol=1e-12, max_iters=200_000), 0.0)
    ls = np.linalg.solve(gram, b)
    assert np.linalg.norm(sol.alpha - ls) / np.linalg.norm(ls) < 1e-8


@given(
    re=st.floats(-5, 5), im=st.floats(-5, 5), w=st.floats(0, 6),
    algo=st.sampled_from(ALGOS),
)
def test_scalar_soft_threshold(re, im, w, algo):
    y = complex(re, im)
    sol = lasso_solve(np.array([[1.0 + 0j]]), np.array([y]), LassoConfig(algorithm=algo), w)
    expected = y * max(1 - w / abs(y), 0) if y != 0 else 0
    assert abs(sol.alpha[0] - expected) < 1e-12


@pytest.mark.parametrize("algo", ALGOS)
def test_large_weight_gives_zero(rng, algo):
    b = crandn(rng, 5)
    sol = lasso_solve(np.eye(5, dtype=complex), b, LassoConfig(algorithm=algo), np.abs(b).max())
    assert np.all(sol.alpha == 0)
    assert sol.converged


@pytest.mark.parametrize("algo", ALGOS)
def test_kkt_and_monotone_trace(rng, algo):
    g, b = _random_problem(rng)
    w = 0.3 * np.abs(g.conj().T @ b).max() / 4
    sol = lasso_solve(g, b, LassoConfig(algorithm=algo, tol=1e-7, max_iters=100_000), w)
    assert sol.converged
    assert kkt_residual(g, b, sol.alpha, w) < 1e-6
    tr = np.asarray(sol.objective_trace)
    assert np.all(np.diff(tr) <= 1e-12 * tr[0])


def test_algorithms_agree(rng):
    g, b = _random_problem(rng)
    w = 0.5
    sols = [lasso_solve(g, b, LassoConfig(algorithm=a, tol=1e-10, max_iters=200_000), w).alpha for a in ALGOS]
    for s in sols[1:]:
        assert np.abs(s - sols[0]).max() < 1e-6


def test_warm_start_never_worse(rng):
    g, b = _random_problem(rng)
    init = crandn(rng, 8)
    sol = lasso_solve(g, b, LassoConfig(max_iters=1), 0.2, init=init)
    assert lasso_objective(g, b, sol.alpha, 0.2) <= lasso_objective(g, b, init, 0.2)


def test_non_convergence_is_flagged(rng):
    g, b = _random_problem(rng)
    sol = lasso_solve(g, b, LassoConfig(max_iters=1, tol=1e-14), 0.1)
    assert not sol.converged


def test_lasso_errors(rng):
    with pytest.raises(ConfigError):
        lasso_solve(np.eye(2), np.ones(2))
    with pytest.raises(ConfigError):
        lasso_solve(np.eye(2), np.ones(2), weight=-1.0)
    with pytest.raises(DimensionError):
        lasso_solve(np.eye(2), np.ones(3), weight=0.1)
    with pytest.raises(ConfigError):
        LassoConfig(algorithm="admm")
    with pytest.raises(ConfigError):
        LassoConfig(lasso_weight=-0.1)


def test_default_weight_rule():
    assert default_lasso_weight(0.5, 15) == pytest.approx(0.5 * np.sqrt(2 * np.log(15)))
    assert default_lasso_weight(0.5, 1) == 0.0
    assert LassoConfig(lasso_weight=0.25).resolve_weight(9.0, 20) == 0.25


def test_single_polar_codeword_recovered(geom64):
    cb = build_polar_codebook(geom64, 1.6)
    h = 2.0 * cb.columns[:, 40]
    rep, sub = _report(h, cb, 1)
    res = reconstruct_lasso(sub, rep, LassoConfig(lasso_weight=1e-9))
    err = np.linalg.norm(h / np.linalg.norm(h) - res.h_hat / np.linalg.norm(res.h_hat))
    assert err < 1e-6


def test_lasso_never_denser_than_ls(geom64):
    cb = build_polar_codebook(geom64, 1.6)
    rng = np.random.default_rng(17)
    from beamtrain.channel import NoiseModel

    for _ in range(10):
        h = cb.columns[:, rng.choice(cb.size, 3, replace=False)] @ crandn(rng, 3)
        rep, sub = _report(h, cb, 12, NoiseModel(0.01), rng)
        lasso = reconstruct_lasso(sub, rep, LassoConfig(), sigma=0.1)
        ls = reconstruct_ls(sub, rep)
        assert np.count_nonzero(lasso.alpha) <= np.count_nonzero(np.abs(ls.alpha) > 0)


def test_support_recovery_small_instance(geom32):
    cb = build_polar_codebook(geom32, 1.6)
    rng = np.random.default_rng(4)
    thetas = cb.thetas()
    # five atoms at well separated angles
    picks = [int(np.argmin(np.abs(thetas - t))) for t in (-0.8, -0.4, 0.0, 0.4, 0.8)]
    true = crandn(rng, 5) + 2
    h = cb.columns[:, picks] @ true
    rep, sub = _report(h, cb, 15)
    assert set(picks) <= set(rep.indices.tolist())
    gram = sub.conj().T @ sub
    b = rep.target
    # exhaustive oracle: the only 5-column support that explains b exactly
    exact = [
        s for s in itertools.combinations(range(15), 5)
        if np.linalg.norm(gram[:, s] @ np.linalg.lstsq(gram[:, s], b, rcond=None)[0] - b) < 1e-9 * np.linalg.norm(b)
    ]
    assert len(exact) == 1
    oracle = {int(rep.indices[i]) for i in exact[0]}
    assert oracle == set(picks)
    for w in (1e-8, 1e-6, 1e-4):
        sol = lasso_solve(gram, b, LassoConfig(tol=1e-12, max_iters=100_000), w)
        found = {int(rep.indices[i]) for i in np.flatnonzero(np.abs(sol.alpha) > 1e-6 * np.abs(sol.alpha).max())}
        assert found == oracle
