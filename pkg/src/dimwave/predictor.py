"""Element-local space-time predictor (Picard iteration).

Solves the weak space-time problem per cell: upwind coupling to the
known state at t^n, the nonconservative volume term B(q) . grad q, and
nodal sources.  With the nodal tensor basis the time coupling reduces to
the (N+1)x(N+1) operator T[m,l] = phi_m(1) phi_l(1) - w_l phi_m'(x_l),
and one Picard sweep is

    q <- T^-1 ( phi(0) u^n - dt w . (B(q) . grad q - S) ).

Because the volume fraction and material fields are static, the system
is linear in the evolved components and the sweep reaches the exact
fixed point in N+2 iterations (the iteration operator is nilpotent in
the time degree).  A growth guard catches the pathological large-dt
regime where the fixed point itself is useless.
"""

from __future__ import annotations

import numpy as np

from . import pde
from ._kernels import HAVE_NUMBA, picard_sweep
from .basis import Basis
from .errors import PredictorDivergenceError
from .state import ALPHA, MATERIAL, NQ

_STATIC = list(MATERIAL) + [ALPHA]


def _ddx(q: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Differentiate along the first node axis of (nc, nx, ny, ..., k)."""
    nc, nx = q.shape[0], q.shape[1]
    return np.matmul(D, q.reshape(nc, nx, -1)).reshape(q.shape)


def _ddy(q: np.ndarray, D: np.ndarray) -> np.ndarray:
    qt = np.ascontiguousarray(q.transpose(0, 2, 1, 3, 4))
    out = np.matmul(D, qt.reshape(q.shape[0], q.shape[2], -1)).reshape(qt.shape)
    return out.transpose(0, 2, 1, 3, 4)


def alpha_gradients(u: np.ndarray, h: np.ndarray, basis: Basis):
    """Static per-node gradients of alpha divided by h, (nc, nx, ny) x2."""
    al = u[..., ALPHA]
    gax = np.einsum("aj,cjb->cab", basis.diff, al) / h[:, 0, None, None]
    gay = np.einsum("bj,caj->cab", basis.diff, al) / h[:, 1, None, None]
    return gax, gay


def _sweep_numpy(q, u, rhs0, dtw, inv_h, basis, p, ft, source):
    gx = _ddx(q, basis.diff) * inv_h[:, 0, None, None, None, None]
    gy = _ddy(q, basis.diff) * inv_h[:, 1, None, None, None, None]
    r = pde.b_matvec(q, gx, 0, p, ft) + pde.b_matvec(q, gy, 1, p, ft)
    if source:
        for idx, s in source.items():
            r[idx] -= s
    rhs = rhs0 - dtw[None, None, None, :, None] * r
    q_new = np.matmul(basis.time_op_inv, rhs)
    q_new[..., _STATIC] = u[:, :, :, None, _STATIC]
    return q_new


def predict(u: np.ndarray, h: np.ndarray, dt: float, basis: Basis,
            p=None, factors=None, source=None, alpha_grads=None,
            tol: float = 1e-12, work=None) -> np.ndarray:
    """Space-time coefficients (nc, nx, ny, nt, 13) for the slab [t, t+dt].

    u : nodal states (nc, nx, ny, 13) at t^n
    h : per-cell sizes (nc, 2)
    factors : optional cached pde.MaterialFactors shaped (nc, nx, ny)
    source : optional dict {cell index: (nx, ny, nt, 13) nodal source}
    alpha_grads : optional cached static (gax, gay) from alpha_gradients
    work : optional pair of persistent (nc, nx, ny, nt, 13) buffers
    """
    nc = u.shape[0]
    nt = basis.n
    if factors is None:
        factors = pde.material_factors(u, p)
    sweeps = basis.degree + 2

    use_kernel = HAVE_NUMBA and (not source or len(source) == 1)
    if use_kernel:
        if alpha_grads is None:
            alpha_grads = alpha_gradients(u, h, basis)
        gax, gay = alpha_grads
        if source:
            src_cell, src = next(iter(source.items()))
            src = np.ascontiguousarray(src)
        else:
            src_cell, src = -1, np.zeros((1, 1, 1, NQ))
        if work is not None:
            q, out = work
        else:
            shape = u.shape[:3] + (nt, NQ)
            q, out = np.empty(shape), np.empty(shape)
        q[:] = u[:, :, :, None, :]
        args = (u, factors.iota, factors.g2, factors.alpha, factors.lam,
                factors.mu, factors.kpp, factors.rho_inv, gax, gay,
                basis.diff, 1.0 / h[:, 0], 1.0 / h[:, 1],
                basis.time_op_inv, basis.at_start, dt * basis.weights,
                src, src_cell)
        for _ in range(sweeps):
            picard_sweep(q, *args, out)
            q, out = out, q
    else:
        ft = pde.MaterialFactors(*(a[..., None] for a in factors))
        inv_h = 1.0 / h
        q = np.repeat(u[:, :, :, None, :], nt, axis=3)
        rhs0 = basis.at_start[None, None, None, :, None] * u[:, :, :, None, :]
        dtw = dt * basis.weights
        for _ in range(sweeps):
            q = _sweep_numpy(q, u, rhs0, dtw, inv_h, basis, p, ft, source)

    # Growth guard: the fixed point is exact for this linear system, but a
    # grossly over-CFL dt makes it explode; flag such cells.  The scale
    # covers source-driven starts from a zero state.
    mq = np.abs(q).max(axis=(1, 2, 3, 4))
    scale = max(float(np.abs(u).max()), 1e-300)
    if source:
        for s in source.values():
            scale = max(scale, dt * float(np.abs(s).max()))
    bad = ~np.isfinite(mq) | (mq > 1e6 * scale)
    if np.any(bad):
        cells = np.flatnonzero(bad)
        raise PredictorDivergenceError(
            f"space-time predictor diverged in {cells.size} cell(s) "
            f"(max growth {np.nanmax(mq) / scale:.2e})", cells=cells)
    return q
