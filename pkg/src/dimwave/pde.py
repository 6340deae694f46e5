"""Quasilinear diffuse-interface elasticity: matrices, eigenstructure, sources.

The governing system is dQ/dt + B1 dQ/dx + B2 dQ/dy + B3 dQ/dz = S with the
13-component state of `state.py`.  Every printed 1/alpha factor of the
matrices is replaced by the regularized reciprocal

    inv_alpha_reg(a) = a / (a^2 + eps0 (1 - a))

which is exact at a = 1 and vanishes at a = 0.  Physical velocities that
appear inside matrix entries are recovered from the stored alpha-weighted
momenta by exact division, so the combined factor (1/alpha) * u collapses to
m / (a^2 + eps0 (1 - a)) -- a bounded, total expression.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DegenerateEigenspaceError, InvalidMaterialError
from .state import (ALPHA, LAM, MU, NORMAL_MOMENTUM, NORMAL_STRESS, NQ, RHO,
                    SHEAR_PAIRS, MaterialSample, RegularizationParams,
                    SourceSpec)

DEFAULT_EPS0 = 1e-3


def _eps0_of(p) -> float:
    if p is None:
        return DEFAULT_EPS0
    if isinstance(p, RegularizationParams):
        return p.eps0
    return float(p)


def wave_speeds(m: MaterialSample):
    """P- and s-wave speeds (sqrt((lam+2mu)/rho), sqrt(mu/rho))."""
    if m.rho <= 0.0 or m.lam + 2.0 * m.mu <= 0.0 or m.mu < 0.0:
        raise InvalidMaterialError(f"invalid material {m}")
    return math.sqrt((m.lam + 2.0 * m.mu) / m.rho), math.sqrt(m.mu / m.rho)


def inv_alpha_reg(alpha, p=None):
    """Regularized reciprocal of the volume fraction, a / (a^2 + eps0 (1-a)).

    Total on [0, 1]: equals 1/a exactly at a = 1 and 0 at a = 0.
    """
    eps0 = _eps0_of(p)
    alpha = np.asarray(alpha, dtype=float)
    return alpha / (alpha * alpha + eps0 * (1.0 - alpha))


def alpha_factor(alpha, p=None):
    """Eigenvalue scaling f(a) = a / sqrt(a^2 + eps0 (1-a)), in [0, 1]."""
    eps0 = _eps0_of(p)
    alpha = np.asarray(alpha, dtype=float)
    return alpha / np.sqrt(alpha * alpha + eps0 * (1.0 - alpha))


class MaterialFactors(NamedTuple):
    """Static per-point factors entering the quasilinear matrices."""

    alpha: np.ndarray
    iota: np.ndarray      # regularized 1/alpha
    g2: np.ndarray        # 1 / (alpha^2 + eps0 (1 - alpha))
    lam: np.ndarray
    mu: np.ndarray
    kpp: np.ndarray       # lam + 2 mu
    rho_inv: np.ndarray


def material_factors(q: np.ndarray, p=None) -> MaterialFactors:
    """Precompute the matrix factors for states q (..., 13).

    All returned arrays are functions of the trivially advected components
    only, so they stay valid for the whole run.
    """
    eps0 = _eps0_of(p)
    a = q[..., ALPHA]
    den = a * a + eps0 * (1.0 - a)
    g2 = 1.0 / den
    lam = q[..., LAM]
    mu = q[..., MU]
    return MaterialFactors(alpha=a, iota=a * g2, g2=g2, lam=lam, mu=mu,
                           kpp=lam + 2.0 * mu, rho_inv=1.0 / q[..., RHO])


def b_matvec(q: np.ndarray, g: np.ndarray, axis: int, p=None,
             factors: MaterialFactors | None = None) -> np.ndarray:
    """Matrix-vector product B_axis(q) . g without materializing B.

    q, g: (..., 13); returns (..., 13).  `factors` may carry cached
    material factors broadcastable against q.
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    f = factors if factors is not None else material_factors(q, p)
    ns = NORMAL_STRESS[axis]
    nv = NORMAL_MOMENTUM[axis]
    (sv1, ss1), (sv2, ss2) = SHEAR_PAIRS[axis]
    on1, on2 = (i for i in NORMAL_STRESS if i != ns)

    out = np.zeros(np.broadcast_shapes(q.shape, g.shape), dtype=float)
    galf = g[..., ALPHA]

    tn = -f.iota * g[..., nv] + f.g2 * q[..., nv] * galf
    out[..., ns] = f.kpp * tn
    out[..., on1] = f.lam * tn
    out[..., on2] = out[..., on1]
    out[..., ss1] = f.mu * (-f.iota * g[..., sv1] + f.g2 * q[..., sv1] * galf)
    out[..., ss2] = f.mu * (-f.iota * g[..., sv2] + f.g2 * q[..., sv2] * galf)

    out[..., nv] = -(f.alpha * g[..., ns] + q[..., ns] * galf) * f.rho_inv
    out[..., sv1] = -(f.alpha * g[..., ss1] + q[..., ss1] * galf) * f.rho_inv
    out[..., sv2] = -(f.alpha * g[..., ss2] + q[..., ss2] * galf) * f.rho_inv
    return out


def assemble_b(q: np.ndarray, axis: int, p=None) -> np.ndarray:
    """Dense quasilinear matrix B_axis(q), shape (..., 13, 13)."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    q = np.asarray(q, dtype=float)
    f = material_factors(q, p)
    ns = NORMAL_STRESS[axis]
    nv = NORMAL_MOMENTUM[axis]
    (sv1, ss1), (sv2, ss2) = SHEAR_PAIRS[axis]
    on1, on2 = (i for i in NORMAL_STRESS if i != ns)

    B = np.zeros(q.shape[:-1] + (NQ, NQ))
    B[..., ns, nv] = -f.iota * f.kpp
    B[..., ns, ALPHA] = f.kpp * q[..., nv] * f.g2
    B[..., on1, nv] = -f.iota * f.lam
    B[..., on1, ALPHA] = f.lam * q[..., nv] * f.g2
    B[..., on2, nv] = B[..., on1, nv]
    B[..., on2, ALPHA] = B[..., on1, ALPHA]
    B[..., ss1, sv1] = -f.iota * f.mu
    B[..., ss1, ALPHA] = f.mu * q[..., sv1] * f.g2
    B[..., ss2, sv2] = -f.iota * f.mu
    B[..., ss2, ALPHA] = f.mu * q[..., sv2] * f.g2

    B[..., nv, ns] = -f.alpha * f.rho_inv
    B[..., nv, ALPHA] = -q[..., ns] * f.rho_inv
    B[..., sv1, ss1] = -f.alpha * f.rho_inv
    B[..., sv1, ALPHA] = -q[..., ss1] * f.rho_inv
    B[..., sv2, ss2] = -f.alpha * f.rho_inv
    B[..., sv2, ALPHA] = -q[..., ss2] * f.rho_inv
    return B


def eigenvalues(q: np.ndarray, axis: int, p=None) -> np.ndarray:
    """The 13 eigenvalues of B_axis(q), sorted ascending.

    Spectrum: f(alpha) * {-cp, -cs, -cs, 0 x7, +cs, +cs, +cp}.
    """
    q = np.asarray(q, dtype=float)
    m = MaterialSample(lam=float(q[..., LAM]), mu=float(q[..., MU]),
                       rho=float(q[..., RHO]))
    cp, cs = wave_speeds(m)
    f = float(alpha_factor(q[..., ALPHA], p))
    lams = np.zeros(NQ)
    lams[0] = -f * cp
    lams[1] = lams[2] = -f * cs
    lams[10] = lams[11] = f * cs
    lams[12] = f * cp
    return np.sort(lams)


def right_eigenvectors(q: np.ndarray, p=None) -> np.ndarray:
    """Analytic right-eigenvector matrix of B1(q) for alpha > 0.

    Columns pair with the eigenvalue ordering (-f cp, -f cs, -f cs,
    0 x7, +f cs, +f cs, +f cp); the velocity rows carry the factor
    g = sqrt(alpha^2 + eps0 (1-alpha)) so that the columns are exact
    eigenvectors of the regularized matrix.  Singular when mu = 0.
    """
    eps0 = _eps0_of(p)
    q = np.asarray(q, dtype=float)
    a = float(q[ALPHA])
    if a <= 0.0:
        raise DegenerateEigenspaceError(
            "eigenvector matrix degenerates at alpha = 0; use the numerical path")
    m = MaterialSample(lam=float(q[LAM]), mu=float(q[MU]), rho=float(q[RHO]))
    cp, cs = wave_speeds(m)
    rho = m.rho
    g = math.sqrt(a * a + eps0 * (1.0 - a))

    R = np.zeros((NQ, NQ))
    # -f cp and +f cp columns.
    for col, sgn in ((0, 1.0), (12, -1.0)):
        R[0, col] = rho * cp * cp
        R[1, col] = rho * (cp * cp - 2.0 * cs * cs)
        R[2, col] = R[1, col]
        R[6, col] = sgn * g * cp
    # -f cs / +f cs columns, (sxy, av) pair.
    for col, sgn in ((1, 1.0), (11, -1.0)):
        R[3, col] = rho * cs * cs
        R[7, col] = sgn * g * cs
    # -f cs / +f cs columns, (sxz, aw) pair.
    for col, sgn in ((2, 1.0), (10, -1.0)):
        R[5, col] = rho * cs * cs
        R[8, col] = sgn * g * cs
    # Stationary modes: syy, szz, syz, rho, mu, lam, and the alpha contact.
    R[1, 3] = 1.0
    R[2, 4] = 1.0
    R[4, 5] = 1.0
    R[11, 6] = 1.0
    R[10, 7] = 1.0
    R[9, 8] = 1.0
    R[0, 9] = -q[0]
    R[3, 9] = -q[3]
    R[5, 9] = -q[5]
    R[6, 9] = q[6]
    R[7, 9] = q[7]
    R[8, 9] = q[8]
    R[12, 9] = a
    return R


def ricker(t, s: SourceSpec):
    """Ricker source time function a1 (1/2 + a2 (t-tD)^2) exp(a2 (t-tD)^2)."""
    t = np.asarray(t, dtype=float)
    x = s.a2 * (t - s.delay) ** 2
    return s.amplitude * (0.5 + x) * np.exp(x)


def signal_speed(lam, mu, rho, alpha, p=None):
    """Regularized maximum signal speed f(alpha) * cp, vectorized."""
    cp = np.sqrt((lam + 2.0 * mu) / rho)
    return alpha_factor(alpha, p) * cp
