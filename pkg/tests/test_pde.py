"""Quasilinear system: matrices, eigenstructure, regularization, sources."""

import math

import numpy as np
import pytest

from dimwave import pde
from dimwave.errors import DegenerateEigenspaceError, InvalidMaterialError
from dimwave.state import (ALPHA, NQ, MaterialSample, RegularizationParams,
                           SourceSpec, make_state)

MAT = MaterialSample(lam=2.0, mu=1.0, rho=1.0)


class TestWaveSpeeds:
    def test_unit_material(self):
        assert pde.wave_speeds(MAT) == pytest.approx((2.0, 1.0))

    def test_lamb_material(self):
        m = MaterialSample(lam=7.5096725e9, mu=7.50916375e9, rho=2200.0)
        cp, cs = pde.wave_speeds(m)
        assert cp == pytest.approx(3200.0, rel=1e-12)
        assert cs == pytest.approx(1847.5, rel=1e-12)

    def test_zero_shear(self):
        assert pde.wave_speeds(MaterialSample(1.0, 0.0, 1.0)) == pytest.approx((1.0, 0.0))

    def test_invalid(self):
        with pytest.raises(InvalidMaterialError):
            MaterialSample(lam=2.0, mu=1.0, rho=-1.0)
        with pytest.raises(InvalidMaterialError):
            MaterialSample(lam=-3.0, mu=1.0, rho=1.0)


class TestInvAlphaReg:
    def test_solid_exact(self):
        assert pde.inv_alpha_reg(1.0) == 1.0

    def test_vacuum(self):
        assert pde.inv_alpha_reg(0.0) == 0.0

    def test_midpoint(self):
        assert pde.inv_alpha_reg(0.5, 1e-3) == pytest.approx(1.996007984031936, rel=1e-14)

    def test_params_type(self):
        assert pde.inv_alpha_reg(0.5, RegularizationParams(1e-3)) == \
            pytest.approx(0.5 / 0.2505, rel=1e-15)

    def test_factor_bounds(self):
        a = np.linspace(0.0, 1.0, 1001)
        f = pde.alpha_factor(a)
        assert np.all(f >= 0.0) and np.all(f <= 1.0)
        assert pde.alpha_factor(1.0) == 1.0
        assert pde.alpha_factor(0.0) == 0.0


class TestAssembleB:
    def test_classical_entry_at_unit_alpha(self):
        q = make_state(MAT, 1.0)
        B = pde.assemble_b(q, 0)
        assert B[0, 6] == -(MAT.lam + 2.0 * MAT.mu)

    def test_last_column_zero_for_quiescent_state(self):
        q = make_state(MAT, 0.73)
        B = pde.assemble_b(q, 0)
        np.testing.assert_array_equal(B[:, ALPHA], 0.0)

    def test_full_entry_table(self):
        # hand-transcribed quasilinear matrix for lam=2, mu=1, rho=1,
        # alpha=0.5, u=0.1, sigma_xx=0.3, eps0=1e-3
        lam, mu, rho, a, u, sxx, eps0 = 2.0, 1.0, 1.0, 0.5, 0.1, 0.3, 1e-3
        q = make_state(MaterialSample(lam, mu, rho), a,
                       velocity=(u, 0.0, 0.0),
                       stress=(sxx, 0.0, 0.0, 0.0, 0.0, 0.0))
        inv = a / (a * a + eps0 * (1.0 - a))
        expected = np.zeros((NQ, NQ))
        expected[0, 6] = -inv * (lam + 2 * mu)
        expected[0, 12] = inv * (lam + 2 * mu) * u
        expected[1, 6] = expected[2, 6] = -inv * lam
        expected[1, 12] = expected[2, 12] = inv * lam * u
        expected[3, 7] = -inv * mu
        expected[5, 8] = -inv * mu
        expected[6, 0] = -a / rho
        expected[6, 12] = -sxx / rho
        expected[7, 3] = -a / rho
        expected[8, 5] = -a / rho
        B = pde.assemble_b(q, 0, eps0)
        np.testing.assert_allclose(B, expected, rtol=1e-14, atol=1e-16)

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            pde.assemble_b(make_state(MAT, 1.0), 3)

    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(5)
        for axis in (0, 1, 2):
            q = make_state(MaterialSample(2.3, 0.7, 1.4), 0.6,
                           velocity=rng.uniform(-1, 1, 3),
                           stress=rng.uniform(-1, 1, 6))
            g = rng.normal(size=NQ)
            np.testing.assert_allclose(pde.b_matvec(q, g, axis),
                                       pde.assemble_b(q, axis) @ g,
                                       atol=1e-13)


class TestEigenvalues:
    def test_unit_alpha_spectrum(self):
        q = make_state(MAT, 1.0)
        np.testing.assert_allclose(
            pde.eigenvalues(q, 0),
            [-2, -1, -1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 2], atol=1e-15)

    def test_vacuum_spectrum_zero(self):
        q = make_state(MAT, 0.0)
        np.testing.assert_array_equal(pde.eigenvalues(q, 0), np.zeros(NQ))

    def test_regularized_vs_numerical_eigensolver(self):
        q = make_state(MAT, 0.5, velocity=(0.1, -0.2, 0.3),
                       stress=(0.3, 0.1, -0.2, 0.05, 0.02, -0.04))
        for axis in (0, 1, 2):
            ev = np.sort(np.linalg.eigvals(pde.assemble_b(q, axis)).real)
            np.testing.assert_allclose(pde.eigenvalues(q, axis), ev, atol=1e-12)
        f = 0.5 / math.sqrt(0.25 + 1e-3 * 0.5)
        assert pde.eigenvalues(q, 0)[-1] == pytest.approx(2.0 * f, rel=1e-14)

    def test_spectrum_symmetric_and_rotation_invariant(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            q = make_state(MaterialSample(*rng.uniform(0.5, 3.0, 2), rng.uniform(0.5, 2.0)),
                           rng.uniform(0, 1),
                           velocity=rng.uniform(-1, 1, 3),
                           stress=rng.uniform(-1, 1, 6))
            e0 = pde.eigenvalues(q, 0)
            np.testing.assert_allclose(e0, -e0[::-1], atol=1e-13)
            for axis in (1, 2):
                np.testing.assert_allclose(pde.eigenvalues(q, axis), e0, atol=1e-13)


class TestRightEigenvectors:
    def test_first_column_printed_values(self):
        q = make_state(MAT, 1.0)
        R = pde.right_eigenvectors(q)
        cp, cs = 2.0, 1.0
        col = np.zeros(NQ)
        col[0] = MAT.rho * cp * cp
        col[1] = col[2] = MAT.rho * (cp * cp - 2 * cs * cs)
        col[6] = cp
        np.testing.assert_allclose(R[:, 0], col, atol=1e-15)

    def _residual(self, q, eps0=1e-3):
        R = pde.right_eigenvectors(q, eps0)
        B = pde.assemble_b(q, 0, eps0)
        cp, cs = pde.wave_speeds(MaterialSample(q[9], q[10], q[11]))
        f = float(pde.alpha_factor(q[ALPHA], eps0))
        lams = np.array([-f * cp, -f * cs, -f * cs, 0, 0, 0, 0, 0, 0, 0,
                         f * cs, f * cs, f * cp])
        scale = max(np.abs(B).max(), 1.0) * np.abs(R).max(axis=0)
        return np.abs(B @ R - R * lams).max(axis=0) / scale

    def test_identity_at_unit_alpha(self):
        q = make_state(MAT, 1.0, velocity=(0.2, -0.1, 0.4),
                       stress=(1.0, 0.5, -0.2, 0.3, 0.1, -0.6))
        assert self._residual(q).max() < 1e-12

    def test_identity_with_regularization(self):
        q = make_state(MAT, 0.7, velocity=(0.1, 0.2, -0.3),
                       stress=(0.5, -0.3, 0.2, 0.1, -0.2, 0.3))
        assert self._residual(q).max() < 1e-12

    def test_degenerate_at_vacuum(self):
        with pytest.raises(DegenerateEigenspaceError):
            pde.right_eigenvectors(make_state(MAT, 0.0))


class TestRicker:
    SRC = SourceSpec(location=(0.0, 0.0), direction=(0.0, 1.0),
                     amplitude=-2000.0, center_frequency=14.5, delay=0.08)

    def test_peak_at_delay(self):
        assert pde.ricker(0.08, self.SRC) == pytest.approx(-1000.0, rel=1e-15)

    def test_decay_far_from_delay(self):
        assert abs(pde.ricker(0.08 + 1.0, self.SRC)) < 1e-300
        assert abs(pde.ricker(0.08 - 1.0, self.SRC)) < 1e-300

    def test_frozen_value(self):
        # independent arbitrary-precision evaluation of
        # a1 (1/2 + a2 (t-tD)^2) exp(a2 (t-tD)^2) at t = 0.1:
        # a2 = -(pi 14.5)^2 = -2075.08432532903765
        assert self.SRC.a2 == pytest.approx(-2075.08432532903765, rel=1e-15)
        assert pde.ricker(0.1, self.SRC) == pytest.approx(287.8122368634932515,
                                                          rel=1e-13)

    def test_direction_must_be_unit(self):
        with pytest.raises(ValueError):
            SourceSpec(location=(0, 0), direction=(1.0, 1.0), amplitude=1.0,
                       center_frequency=1.0, delay=0.0)


def test_trivially_advected_components_have_zero_rows():
    rng = np.random.default_rng(2)
    q = make_state(MaterialSample(2.0, 1.0, 1.3), 0.3,
                   velocity=rng.uniform(-1, 1, 3), stress=rng.uniform(-1, 1, 6))
    for axis in (0, 1, 2):
        B = pde.assemble_b(q, axis)
        np.testing.assert_array_equal(B[9:, :], 0.0)
