"""Volume-fraction field construction: signed distances and diffuse profiles.

The solid region is described by a signed distance r(x) that is negative
inside the solid and positive outside.  The diffuse profile maps r to the
volume fraction through

    xi(r) = clamp of (r + (1-eta) I_D) / (2 I_D)   (piecewise linear)
    alpha(r) = (1 - xi(r))^p_d

so alpha = 1 deep inside the solid and 0 well outside.  I_D = 0 degenerates
to a sharp step handled separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dtm import Raster
from .errors import GeometryError
from .state import MaterialSample


@dataclass(frozen=True)
class InterfaceProfile:
    """Diffuse-interface shape: half thickness I_D, shift eta, exponent p_d."""

    thickness: float = 0.0
    eta: float = -0.6
    shape_exponent: float = 0.5

    def __post_init__(self):
        if self.thickness < 0.0:
            raise ValueError("interface thickness must be >= 0")
        if self.shape_exponent <= 0.0:
            raise ValueError("shape exponent must be positive")


def xi_profile(r, prof: InterfaceProfile):
    """Piecewise-linear transition function of the signed distance.

    1 for r > (1+eta) I_D, 0 for r < -(1-eta) I_D, linear in between.
    Requires a positive thickness (the sharp step bypasses this map).
    """
    if prof.thickness <= 0.0:
        raise ValueError("xi_profile requires a positive interface thickness")
    r = np.asarray(r, dtype=float)
    hi = (1.0 + prof.eta) * prof.thickness
    lo = -(1.0 - prof.eta) * prof.thickness
    xi = (r - lo) / (2.0 * prof.thickness)
    return np.clip(xi, 0.0, 1.0)


def alpha_of_r(r, prof: InterfaceProfile):
    """Volume fraction alpha(r) = (1 - xi(r))^p_d; sharp step for I_D = 0."""
    r = np.asarray(r, dtype=float)
    if prof.thickness <= 0.0:
        return np.where(r < 0.0, 1.0, 0.0)
    return (1.0 - xi_profile(r, prof)) ** prof.shape_exponent


# ---------------------------------------------------------------------------
# Geometry variants
# ---------------------------------------------------------------------------

class Geometry:
    """Base class: a solid region with a signed distance function."""

    def signed_distance(self, x, y, z=None):
        raise NotImplementedError


@dataclass(frozen=True)
class Everywhere(Geometry):
    """Whole domain solid (alpha = 1)."""

    def signed_distance(self, x, y, z=None):
        return np.full(np.broadcast_shapes(np.shape(x), np.shape(y)), -np.inf)


@dataclass(frozen=True)
class HalfSpace(Geometry):
    """Solid on the inner side of a plane through `point` with outward `normal`."""

    point: tuple
    normal: tuple

    def signed_distance(self, x, y, z=None):
        nx, ny = self.normal[0], self.normal[1]
        nn = math.hypot(nx, ny)
        return (nx * (np.asarray(x) - self.point[0])
                + ny * (np.asarray(y) - self.point[1])) / nn


@dataclass(frozen=True)
class Circle(Geometry):
    """Circular (spherical) interface; `solid_outside` selects the cavity case."""

    center: tuple
    radius: float
    solid_outside: bool = True

    def signed_distance(self, x, y, z=None):
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        d = dx * dx + dy * dy
        if z is not None and len(self.center) > 2:
            dz = np.asarray(z, dtype=float) - self.center[2]
            d = d + dz * dz
        d = np.sqrt(d)
        return self.radius - d if self.solid_outside else d - self.radius


@dataclass(frozen=True)
class HeightField(Geometry):
    """Solid below y = f(x) with f(x) = base + sum_i amp_i sin(k_i x).

    The signed distance is the vertical offset y - f(x); for the shallow
    slopes of interest the error against the true Euclidean distance is
    O(slope^2) I_D.
    """

    base: float
    terms: tuple = ()   # ((amplitude, wavenumber), ...)

    def height(self, x):
        x = np.asarray(x, dtype=float)
        h = np.full(x.shape, float(self.base))
        for amp, k in self.terms:
            h = h + amp * np.sin(k * x)
        return h

    def signed_distance(self, x, y, z=None):
        return np.asarray(y, dtype=float) - self.height(x)


@dataclass(frozen=True)
class RasterSurface(Geometry):
    """Solid below a raster height field z = h(x, y) (3D geometry).

    Queries interpolate the raster bilinearly; the extent policy of the
    raster applies (clamp-to-edge by default).
    """

    raster: Raster

    def signed_distance(self, x, y, z=None):
        if z is None:
            raise GeometryError("raster surface needs 3D query points (x, y, z)")
        return np.asarray(z, dtype=float) - self.raster.bilinear(x, y)


@dataclass(frozen=True)
class ClipBox:
    """Sharp (I_D = 0) rectangular restriction of the solid region.

    Grid-aligned outer free surfaces are represented by zeroing alpha
    outside the box; use +/-inf for unbounded sides.
    """

    xlim: tuple = (-math.inf, math.inf)
    ylim: tuple = (-math.inf, math.inf)

    def inside(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return ((x >= self.xlim[0]) & (x <= self.xlim[1])
                & (y >= self.ylim[0]) & (y <= self.ylim[1]))


@dataclass(frozen=True)
class GeometrySpec:
    """A solid region: one geometry variant, a diffuse profile, optional clip."""

    geometry: Geometry
    profile: InterfaceProfile = field(default_factory=InterfaceProfile)
    clip: ClipBox | None = None

    def alpha_at(self, x, y, z=None):
        """Volume fraction at arbitrary points, clamped to [0, 1]."""
        r = self.geometry.signed_distance(x, y, z)
        a = alpha_of_r(r, self.profile)
        if self.clip is not None:
            a = np.where(self.clip.inside(x, y), a, 0.0)
        return np.clip(a, 0.0, 1.0)


def signed_distance(spec: GeometrySpec, x, y, z=None):
    """Signed distance of the spec's geometry (negative inside the solid)."""
    return spec.geometry.signed_distance(x, y, z)


# ---------------------------------------------------------------------------
# Material layout
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfPlanePredicate:
    """Region y > a + b x (first matching layer wins)."""

    a: float
    b: float = 0.0

    def contains(self, x, y):
        return np.asarray(y, dtype=float) > self.a + self.b * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class MaterialLayout:
    """Ordered (predicate, material) layers over a default material."""

    default: MaterialSample
    layers: tuple = ()   # ((predicate, MaterialSample), ...)

    def sample(self, x, y):
        """(lam, mu, rho) arrays at the query points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        lam = np.full(shape, self.default.lam)
        mu = np.full(shape, self.default.mu)
        rho = np.full(shape, self.default.rho)
        assigned = np.zeros(shape, dtype=bool)
        for pred, mat in self.layers:
            m = pred.contains(x, y) & ~assigned
            lam[m], mu[m], rho[m] = mat.lam, mat.mu, mat.rho
            assigned |= m
        return lam, mu, rho
