"""Sampling of geometry, materials and initial conditions onto DG nodes.

Nodal layouts are (n_cells, nx, ny) with nx = ny = N+1 tensor Gauss-
Legendre nodes per cell; state arrays append the 13 components last.
"""

from __future__ import annotations

import numpy as np

from .amr import Mesh
from .basis import Basis
from .geometry import GeometrySpec, MaterialLayout
from .state import ALPHA, LAM, MU, NQ, RHO


def node_coords_1d(mesh: Mesh, basis: Basis, axis: int) -> np.ndarray:
    """Per-cell 1D node coordinates along an axis, shape (nc, N+1)."""
    return mesh.origin[:, axis:axis + 1] + mesh.h[:, axis:axis + 1] * basis.nodes[None, :]


def node_coords(mesh: Mesh, basis: Basis):
    """Broadcastable nodal coordinates: x (nc, n, 1), y (nc, 1, n)."""
    xs = node_coords_1d(mesh, basis, 0)[:, :, None]
    ys = node_coords_1d(mesh, basis, 1)[:, None, :]
    return xs, ys


def sample_alpha_nodal(mesh: Mesh, basis: Basis, geom: GeometrySpec) -> np.ndarray:
    """Volume fraction at the tensor nodes of every leaf, clamped to [0, 1]."""
    xs, ys = node_coords(mesh, basis)
    return geom.alpha_at(xs, ys)


def sample_alpha_subcells(mesh: Mesh, basis: Basis, geom: GeometrySpec,
                          chunk: int = 2048) -> np.ndarray:
    """Per-subcell averages of pointwise alpha, shape (nc, m, m), m = 2N+1.

    Each subcell average is the tensor GL quadrature of alpha samples on
    that subcell.
    """
    m, n = basis.n_sub, basis.n
    sub_nodes = ((np.arange(m)[:, None] + basis.nodes[None, :]) / m).ravel()  # (m*n,)
    out = np.empty((mesh.n_cells, m, m))
    w = basis.weights
    for lo in range(0, mesh.n_cells, chunk):
        hi = min(lo + chunk, mesh.n_cells)
        xs = mesh.origin[lo:hi, 0, None] + mesh.h[lo:hi, 0, None] * sub_nodes[None, :]
        ys = mesh.origin[lo:hi, 1, None] + mesh.h[lo:hi, 1, None] * sub_nodes[None, :]
        a = geom.alpha_at(xs[:, :, None], ys[:, None, :])
        a = a.reshape(hi - lo, m, n, m, n)
        out[lo:hi] = np.einsum("cisjt,s,t->cij", a, w, w)
    return np.clip(out, 0.0, 1.0, out=out)


def sample_alpha_field(mesh: Mesh, basis: Basis, geom: GeometrySpec):
    """Nodal alpha tensors and subcell alpha averages for every leaf."""
    return sample_alpha_nodal(mesh, basis, geom), sample_alpha_subcells(mesh, basis, geom)


def cell_means(nodal: np.ndarray, basis: Basis) -> np.ndarray:
    """Quadrature cell means of nodal data (nc, n, n[, comps])."""
    w = basis.weights
    if nodal.ndim == 3:
        return np.einsum("cij,i,j->c", nodal, w, w)
    return np.einsum("cijk,i,j->ck", nodal, w, w)


def alpha_mean_fn(geom: GeometrySpec, basis: Basis):
    """Per-mesh alpha means callback for refine_static."""

    def fn(mesh: Mesh) -> np.ndarray:
        return cell_means(sample_alpha_nodal(mesh, basis, geom), basis)

    return fn


def initial_state(mesh: Mesh, basis: Basis, geom: GeometrySpec,
                  materials: MaterialLayout, ic=None) -> np.ndarray:
    """Nodal state array (nc, n, n, 13) with sampled alpha and materials.

    `ic(x, y)` may return an additive (..., 13) perturbation evaluated at
    the nodal coordinates (applied verbatim, like the scenario
    definitions prescribe).
    """
    xs, ys = node_coords(mesh, basis)
    n = basis.n
    u = np.zeros((mesh.n_cells, n, n, NQ))
    lam, mu, rho = materials.sample(xs, ys)
    u[..., LAM] = lam
    u[..., MU] = mu
    u[..., RHO] = rho
    u[..., ALPHA] = geom.alpha_at(xs, ys)
    if ic is not None:
        u += ic(xs, ys)
    return u
