"""Space-time predictor: fixed points, series oracle, divergence guard."""

import numpy as np
import pytest

import oracles
from dimwave import pde, predictor
from dimwave.basis import build_basis
from dimwave.errors import PredictorDivergenceError
from dimwave.state import NQ, MaterialSample, make_state

MAT = MaterialSample(lam=2.0, mu=1.0, rho=1.0)


def uniform_cells(basis, state, nc=1):
    n = basis.n
    return np.tile(state, (nc, n, n, 1))


def test_constant_state_stays_constant():
    basis = build_basis(4)
    u = uniform_cells(basis, make_state(MAT, 1.0, velocity=(0.1, 0.2, 0.0),
                                        stress=(1, 2, 3, 0.5, 0, 0)))
    q = predictor.predict(u, np.array([[0.1, 0.1]]), 0.01, basis)
    np.testing.assert_allclose(
        q, np.broadcast_to(u[:, :, :, None, :], q.shape), atol=1e-13)


def test_zero_state_without_source_stays_zero():
    basis = build_basis(3)
    u = uniform_cells(basis, make_state(MAT, 1.0))
    q = predictor.predict(u, np.array([[0.1, 0.1]]), 0.01, basis)
    np.testing.assert_array_equal(q[..., :9], 0.0)


def test_static_components_bit_exact():
    basis = build_basis(2)
    rng = np.random.default_rng(9)
    u = uniform_cells(basis, make_state(MAT, 0.8))
    u[..., :9] = rng.normal(size=u[..., :9].shape)
    q = predictor.predict(u, np.array([[0.05, 0.05]]), 1e-3, basis)
    for k in range(9, 13):
        np.testing.assert_array_equal(q[..., k],
                                      np.repeat(u[..., k][..., None], basis.n, axis=-1))


@pytest.mark.parametrize("degree", [2, 4])
def test_matches_cauchy_kovalevskaya_series(degree):
    # 1D p-wave Gaussian in one cell: the predictor fixed point equals the
    # terminating Taylor series of the frozen-coefficient linear system
    basis = build_basis(degree)
    n = basis.n
    hx = 0.05
    x = basis.nodes * hx
    g = np.exp(-((x - 0.02) / 0.015) ** 2)
    u = np.zeros((1, n, n, NQ))
    u[..., 9], u[..., 10], u[..., 11], u[..., 12] = MAT.lam, MAT.mu, MAT.rho, 1.0
    for j in range(n):
        u[0, :, j, 0] = 4.0 * g
        u[0, :, j, 1] = 2.0 * g
        u[0, :, j, 2] = 2.0 * g
        u[0, :, j, 6] = -2.0 * g
    dt = 1e-3
    q = predictor.predict(u, np.array([[hx, hx]]), dt, basis)
    B = pde.assemble_b(make_state(MAT, 1.0), 0)
    ck = oracles.ck_series(u[0], B, basis.diff / hx, dt * basis.nodes)
    np.testing.assert_allclose(q[0], ck, atol=2e-12 * np.abs(ck).max())


def test_numpy_fallback_matches_kernel():
    from dimwave import _kernels
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba not available")
    basis = build_basis(3)
    rng = np.random.default_rng(12)
    n = basis.n
    u = np.zeros((3, n, n, NQ))
    u[..., :9] = rng.normal(size=(3, n, n, 9))
    u[..., 9], u[..., 10], u[..., 11] = 2.0, 1.0, 1.0
    u[..., 12] = rng.uniform(0.2, 1.0, size=(3, 1, 1))
    # smooth alpha variation inside cells
    u[..., 12] = np.clip(u[..., 12] + 0.1 * rng.normal(size=(3, n, n)), 0.05, 1.0)
    h = np.array([[0.1, 0.12]] * 3)
    qk = predictor.predict(u, h, 5e-4, basis)
    _kernels.HAVE_NUMBA = False
    try:
        qn = predictor.predict(u, h, 5e-4, basis)
    finally:
        _kernels.HAVE_NUMBA = True
    np.testing.assert_allclose(qk, qn, atol=1e-13)


def test_divergence_error_for_oversized_step():
    basis = build_basis(4)
    n = basis.n
    hx = 0.01
    u = np.zeros((1, n, n, NQ))
    u[..., 9], u[..., 10], u[..., 11], u[..., 12] = 2.0, 1.0, 1.0, 1.0
    u[0, :, :, 0] = np.sin(8 * basis.nodes)[:, None]
    u[0, :, :, 6] = np.cos(8 * basis.nodes)[:, None]
    with pytest.raises(PredictorDivergenceError):
        predictor.predict(u, np.array([[hx, hx]]), 50.0, basis)
