"""Built-in batch scenarios (desk-scale 1D/2D experiments)."""

from __future__ import annotations

import math

from .config import (GeometryConfig, InitialConfig, MaterialLayerConfig,
                     OutputConfig, RunConfig)
from .errors import ConfigError
from .geometry import ClipBox, InterfaceProfile
from .solver import Receiver
from .state import MaterialSample, SourceSpec

_TILT = math.radians(10.0)
_RICKER = dict(amplitude=-2000.0, center_frequency=14.5, delay=0.08)


def plane_reflection_1d() -> RunConfig:
    """Plane p-wave pulse reflecting off a free surface at x = 0.

    The Gaussian pulse starts at x0 = -0.25 and, at cp = 2, returns to
    its initial position at t = 0.25.  Default interface width 0 (sharp,
    face-aligned); the sensitivity sweep varies it.
    """
    return RunConfig(
        name="plane-reflection-1d", t_end=0.25, degree=4,
        xlim=(-1.0, 1.0), ylim=(-0.1, 0.1), cells=(100, 2),
        bc=("outflow", "extrapolation"),
        geometry=GeometryConfig(kind="half-space", point=(0.0, 0.0),
                                normal=(1.0, 0.0),
                                profile=InterfaceProfile(thickness=0.0)),
        default_material=MaterialSample(lam=2.0, mu=1.0, rho=1.0),
        initial=InitialConfig(
            kind="gaussian",
            vector=(0.4, 0.2, 0.2, 0.0, 0.0, 0.0, -0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            center=-0.25, halfwidth=0.05),
        receivers=(Receiver("r1", (-0.25, 0.0), ("sigma_xx", "u")),),
        output=OutputConfig(snapshot_every=0))


def cavity_2d() -> RunConfig:
    """Plane p-wave scattering on an empty circular cavity of radius 0.25."""
    return RunConfig(
        name="cavity-2d", t_end=1.0, degree=4,
        xlim=(-3.0, 3.0), ylim=(-3.0, 3.0), cells=(80, 80), lmax=1,
        geometry=GeometryConfig(kind="circle", center=(0.0, 0.0), radius=0.25,
                                solid_outside=True,
                                profile=InterfaceProfile(thickness=0.01)),
        default_material=MaterialSample(lam=2.0, mu=1.0, rho=1.0),
        initial=InitialConfig(
            kind="sine", amplitude=0.1,
            vector=(4.0, 2.0, 2.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)),
        receivers=(
            Receiver("x1", (0.5, 0.5), ("sigma_xx", "sigma_yy", "sigma_xy", "u", "v")),
            Receiver("x2", (1.0, 0.0), ("sigma_xx", "sigma_yy", "sigma_xy", "u", "v")),
        ),
        output=OutputConfig(snapshot_every=0))


def lamb_tilted_2d() -> RunConfig:
    """Lamb problem with a free surface tilted by 10 degrees.

    Material from cp = 3200 m/s, cs = 1847.5 m/s, rho = 2200 kg/m^3;
    directional Ricker point source normal to the tilted surface.
    """
    return RunConfig(
        name="lamb-tilted-2d", t_end=1.0, degree=3,
        xlim=(0.0, 4000.0), ylim=(0.0, 2880.0), cells=(96, 90), lmax=2,
        geometry=GeometryConfig(
            kind="half-space", point=(0.0, 2000.0),
            normal=(-math.sin(_TILT), math.cos(_TILT)),
            profile=InterfaceProfile(thickness=2.0)),
        default_material=MaterialSample.from_speeds(3200.0, 1847.5, 2200.0),
        source=SourceSpec(location=(1720.0, 2265.28),
                          direction=(-math.sin(_TILT), math.cos(_TILT)),
                          **_RICKER),
        receivers=(Receiver("x1", (2694.96, 2475.08), ("u", "v")),
                   Receiver("x2", (2694.96, 2460.08), ("u", "v"))),
        output=OutputConfig(snapshot_every=0))


def topo_two_layer_2d() -> RunConfig:
    """Two-layer medium under the sinusoidal topography
    f(x) = 2000 + 100 (sin(3x/200) + sin(2x/200)); sharp side/bottom faces."""
    zone1 = MaterialSample.from_speeds(3200.0, 1847.5, 2200.0)
    zone2 = MaterialSample.from_speeds(2262.74, 1306.38, 2200.0)
    return RunConfig(
        name="topo-two-layer-2d", t_end=2.0, degree=4,
        xlim=(-50.0, 4050.0), ylim=(-50.0, 2300.0), cells=(160, 90), lmax=1,
        geometry=GeometryConfig(
            kind="height-field", base=2000.0,
            terms=((100.0, 3.0 / 200.0), (100.0, 2.0 / 200.0)),
            profile=InterfaceProfile(thickness=5.0),
            clip=ClipBox(xlim=(0.0, 4000.0), ylim=(0.0, math.inf))),
        default_material=zone2,
        layers=(MaterialLayerConfig(material=zone1, y_gt=(1500.0, -0.5)),),
        source=SourceSpec(location=(3000.0, 1500.18),
                          direction=(-math.sin(_TILT), math.cos(_TILT)),
                          **_RICKER),
        receivers=(Receiver("r1", (893.80, 1994.83), ("u", "v")),
                   Receiver("r2", (1790.0, 880.0), ("u", "v")),
                   Receiver("r3", (1000.0, 500.0), ("u", "v"))),
        output=OutputConfig(snapshot_every=0))


_REGISTRY = {
    "plane-reflection-1d": plane_reflection_1d,
    "cavity-2d": cavity_2d,
    "lamb-tilted-2d": lamb_tilted_2d,
    "topo-two-layer-2d": topo_two_layer_2d,
}


def scenario(name: str) -> RunConfig:
    """Full parameterization of a named scenario."""
    if name not in _REGISTRY:
        raise ConfigError(
            f"unknown scenario '{name}' (available: {', '.join(sorted(_REGISTRY))})")
    return _REGISTRY[name]()


def scenario_names():
    return sorted(_REGISTRY)
