"""Diffuse-interface ADER-DG solver for linear elastic wave propagation.

Complex free-surface topography is represented by a volume-fraction
field alpha on adaptive Cartesian grids instead of boundary-fitted
meshes; a high-order one-step ADER-DG scheme with a path-conservative
Riemann machinery and a subcell TVD finite-volume limiter evolves the
13-component quasilinear system.
"""

from . import (amr, basis, config, convergence, dtm, fields, geometry,
               limiter, output, pde, predictor, riemann, scenarios, solver,
               state)
from .scenarios import scenario
from .solver import Simulation, compute_dt

__version__ = "0.1.0"

__all__ = [
    "amr", "basis", "config", "convergence", "dtm", "fields", "geometry",
    "limiter", "output", "pde", "predictor", "riemann", "scenarios",
    "solver", "state", "scenario", "Simulation", "compute_dt",
]
