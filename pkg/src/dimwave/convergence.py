"""Grid convergence study on the smooth periodic p-wave problem.

A right-going plane p-wave eigenmode in a uniform solid (alpha = 1) is an
exact solution; after one domain transit it returns to the initial
profile.  The observed L2 order between grid doublings approaches N+1.
"""

from __future__ import annotations

import numpy as np

from .amr import Box, Mesh
from .basis import build_basis
from .fields import initial_state
from .geometry import Everywhere, GeometrySpec, MaterialLayout
from .solver import Simulation
from .state import NQ, MaterialSample


def pwave_error(degree: int, ncells: int, t_end: float = 1.0,
                cfl: float = 0.9) -> float:
    """Relative L2 error of (sigma_xx, au) after one transit at cp = 2."""
    basis = build_basis(degree)
    geom = GeometrySpec(Everywhere())
    mat = MaterialSample(lam=2.0, mu=1.0, rho=1.0)
    mats = MaterialLayout(default=mat)
    cp = 2.0
    vec = np.zeros(NQ)
    vec[0], vec[1], vec[2], vec[6] = mat.rho * cp * cp, mat.lam, mat.lam, -cp

    def ic(xs, ys, t=0.0):
        g = 0.01 * np.sin(2.0 * np.pi * (xs - cp * t))
        return vec[None, None, None, :] * g[..., None] * np.ones_like(ys)[..., None]

    mesh = Mesh(Box((-1.0, -0.1), (1.0, 0.1)), (ncells, 2))
    u0 = initial_state(mesh, basis, geom, mats, ic)
    sim = Simulation(mesh, basis, u0, geometry=geom, cfl=cfl,
                     periodic=(True, True), limiter_enabled=False)
    sim.advance(t_end)
    exact = initial_state(mesh, basis, geom, mats,
                          lambda xs, ys: ic(xs, ys, t_end))
    w = basis.weights
    vol = np.prod(mesh.h, axis=1)
    comps = [0, 6]
    diff2 = np.einsum("cabk,a,b,c->", (sim.u - exact)[..., comps] ** 2, w, w, vol)
    ref2 = np.einsum("cabk,a,b,c->", exact[..., comps] ** 2, w, w, vol)
    return float(np.sqrt(diff2 / ref2))


def pwave_convergence(degree: int, levels: int, base: int = 25):
    """[(ncells, rel_l2_error)] over `levels` grid doublings from `base`."""
    rows = []
    for k in range(levels):
        n = base * 2 ** k
        rows.append((n, pwave_error(degree, n)))
    return rows
