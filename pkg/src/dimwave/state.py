"""State vector layout and material/source parameter types.

The evolved state has 13 components per point, ordered

    (sxx, syy, szz, sxy, syz, sxz, a*u, a*v, a*w, lam, mu, rho, alpha)

where the velocities are carried premultiplied by the solid volume
fraction alpha and the material parameters (lam, mu, rho) and alpha are
advected trivially (their time derivative is identically zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMaterialError

NQ = 13

# Component indices.
SXX, SYY, SZZ, SXY, SYZ, SXZ = 0, 1, 2, 3, 4, 5
AU, AV, AW = 6, 7, 8
LAM, MU, RHO, ALPHA = 9, 10, 11, 12

STRESS = (SXX, SYY, SZZ, SXY, SYZ, SXZ)
MOMENTUM = (AU, AV, AW)
MATERIAL = (LAM, MU, RHO)

COMPONENT_NAMES = (
    "sigma_xx", "sigma_yy", "sigma_zz", "sigma_xy", "sigma_yz", "sigma_xz",
    "au", "av", "aw", "lambda", "mu", "rho", "alpha",
)

# Per-axis coupling tables for the quasilinear matrices B1, B2, B3:
# normal stress row, normal momentum column, and the two (momentum, shear
# stress) pairs that carry the shear waves.
NORMAL_STRESS = (SXX, SYY, SZZ)
NORMAL_MOMENTUM = (AU, AV, AW)
SHEAR_PAIRS = (
    ((AV, SXY), (AW, SXZ)),   # x
    ((AU, SXY), (AW, SYZ)),   # y
    ((AV, SYZ), (AU, SXZ)),   # z
)


@dataclass(frozen=True)
class MaterialSample:
    """Isotropic linear-elastic material: Lame constants and density."""

    lam: float
    mu: float
    rho: float

    def __post_init__(self):
        if self.rho <= 0.0:
            raise InvalidMaterialError(f"rho must be positive, got {self.rho}")
        if self.mu < 0.0:
            raise InvalidMaterialError(f"mu must be non-negative, got {self.mu}")
        if self.lam + 2.0 * self.mu <= 0.0:
            raise InvalidMaterialError(
                f"lambda + 2 mu must be positive, got {self.lam + 2.0 * self.mu}"
            )

    @classmethod
    def from_speeds(cls, cp: float, cs: float, rho: float) -> "MaterialSample":
        """Build from p/s wave speeds: mu = rho cs^2, lam = rho (cp^2 - 2 cs^2)."""
        mu = rho * cs * cs
        lam = rho * (cp * cp - 2.0 * cs * cs)
        return cls(lam=lam, mu=mu, rho=rho)


@dataclass(frozen=True)
class RegularizationParams:
    """Parameters of the 1/alpha regularization: eps(alpha) = eps0 (1 - alpha)."""

    eps0: float = 1e-3

    def __post_init__(self):
        if self.eps0 <= 0.0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")


@dataclass(frozen=True)
class SourceSpec:
    """Directional point source with a Ricker wavelet time signature.

    a2 = -(pi f_c)^2 is derived from the center frequency; the direction is
    applied as a body force on the velocity equations.
    """

    location: tuple
    direction: tuple
    amplitude: float          # a1
    center_frequency: float   # f_c
    delay: float              # t_D

    def __post_init__(self):
        n = math.sqrt(sum(d * d for d in self.direction))
        if not math.isclose(n, 1.0, rel_tol=1e-9):
            raise ValueError(f"direction must be a unit vector, |d| = {n}")

    @property
    def a2(self) -> float:
        return -((math.pi * self.center_frequency) ** 2)


def make_state(material: MaterialSample, alpha: float = 1.0, *,
               velocity=(0.0, 0.0, 0.0), stress=(0.0,) * 6) -> np.ndarray:
    """Assemble a single 13-component state from primitive values.

    `velocity` holds physical (u, v, w); the stored momentum components are
    alpha-weighted.
    """
    q = np.zeros(NQ)
    q[list(STRESS)] = stress
    q[list(MOMENTUM)] = alpha * np.asarray(velocity, dtype=float)
    q[LAM], q[MU], q[RHO] = material.lam, material.mu, material.rho
    q[ALPHA] = alpha
    return q
