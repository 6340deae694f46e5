"""Subcell finite-volume limiter on a (2N+1)^2 subgrid per DG cell.

Flagged cells (static mask over the diffuse-interface band) evolve as
subcell averages with a MUSCL-Hancock step: minmod slopes, half-step
trace evolution through the quasilinear system, and the same
path-conservative fluctuations as the DG faces.  Projection to subcell
averages and the mean-preserving least-squares reconstruction are exact
inverses of each other on unlimited data.
"""

from __future__ import annotations

import numpy as np

from . import pde
from .basis import Basis


def build_mask(alpha_nodal: np.ndarray, alpha_sub: np.ndarray,
               eps: float = 1e-3) -> np.ndarray:
    """Flag cells whose alpha samples intersect the open band (eps, 1-eps).

    alpha_nodal: (nc, n, n) nodal values; alpha_sub: (nc, m, m) subcell
    averages.  Pure cells (all samples within eps of 0 or 1) stay
    unflagged, so grid-aligned sharp steps produce an empty mask.
    """
    lo = np.minimum(alpha_nodal.min(axis=(1, 2)), alpha_sub.min(axis=(1, 2)))
    hi = np.maximum(alpha_nodal.max(axis=(1, 2)), alpha_sub.max(axis=(1, 2)))
    return (lo < 1.0 - eps) & (hi > eps)


def dilate_mask(flags: np.ndarray, mesh) -> np.ndarray:
    """Add one ring of face neighbors to a limiter mask.

    Troubled-cell sets are customarily dilated by one layer so that the
    high-order update never couples directly to the steep in-band data.
    """
    out = flags.copy()
    for c in np.flatnonzero(flags):
        for nb in mesh.neighbors(c):
            out[nb] = True
    return out


def project_to_subcells(u: np.ndarray, basis: Basis) -> np.ndarray:
    """Exact subcell averages of nodal polynomials.

    u: (..., n, n, k) nodal coefficients -> (..., m, m, k) averages.
    """
    P = basis.project_sub
    return np.einsum("si,tj,...ijk->...stk", P, P, u, optimize=True)


def reconstruct_dg(patch: np.ndarray, basis: Basis) -> np.ndarray:
    """Mean-preserving least-squares polynomial fit of subcell averages.

    Right inverse of project_to_subcells: reconstruct(project(u)) == u.
    """
    R = basis.reconstruct_sub
    return np.einsum("is,jt,...stk->...ijk", R, R, patch, optimize=True)


def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Componentwise minmod slope limiter."""
    return np.where(a * b <= 0.0, 0.0,
                    np.where(np.abs(a) < np.abs(b), a, b))


def slopes_with_halo(patch: np.ndarray, halo_lo: np.ndarray, halo_hi: np.ndarray,
                     axis: int) -> np.ndarray:
    """Minmod slopes along a subcell axis (axis in {1, 2} of (nf, m, m, k)).

    halo_lo/halo_hi: (nf, m, k) neighbor averages beyond the patch edges.
    """
    ext = np.concatenate([np.expand_dims(halo_lo, axis),
                          patch,
                          np.expand_dims(halo_hi, axis)], axis=axis)
    sl = [slice(None)] * ext.ndim

    def take(a, b):
        s = list(sl)
        s[axis] = slice(a, b)
        return ext[tuple(s)]

    m = patch.shape[axis]
    fwd = take(2, m + 2) - take(1, m + 1)
    bwd = take(1, m + 1) - take(0, m)
    return minmod(bwd, fwd)


def hancock_half_step(patch: np.ndarray, sx: np.ndarray, sy: np.ndarray,
                      dt: float, h_sub, p=None) -> np.ndarray:
    """Half-step evolved cell-center states of the MUSCL scheme.

    q^(n+1/2) = q - dt/2 (B1(q) sx / hx + B2(q) sy / hy); material and
    alpha components are untouched (zero matrix rows).
    """
    rate = pde.b_matvec(patch, sx, 0, p) / h_sub[0] \
        + pde.b_matvec(patch, sy, 1, p) / h_sub[1]
    return patch - 0.5 * dt * rate
