"""Run configuration: TOML parsing, validation, dumping, and assembly.

The configuration is a flat sectioned file (TOML); every scenario can be
dumped to a file and re-run identically.  Validation errors name the
offending key path.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .amr import Box, Mesh, refine_static
from .basis import build_basis
from .errors import ConfigError
from .fields import alpha_mean_fn, initial_state, sample_alpha_subcells
from .geometry import (Circle, ClipBox, Everywhere, GeometrySpec, HalfPlanePredicate,
                       HalfSpace, HeightField, InterfaceProfile, MaterialLayout)
from .solver import Receiver, Simulation
from .state import NQ, MaterialSample, SourceSpec

_GEOMETRY_KINDS = ("none", "half-space", "circle", "height-field")
_IC_KINDS = ("zero", "gaussian", "sine", "pwave")
_BC_KINDS = ("outflow", "extrapolation", "periodic")


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "zero"
    vector: tuple = ()
    amplitude: float = 1.0
    center: float = 0.0
    halfwidth: float = 1.0


@dataclass(frozen=True)
class GeometryConfig:
    kind: str = "none"
    point: tuple = (0.0, 0.0)
    normal: tuple = (1.0, 0.0)
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    solid_outside: bool = True
    base: float = 0.0
    terms: tuple = ()
    profile: InterfaceProfile = field(default_factory=InterfaceProfile)
    clip: ClipBox | None = None


@dataclass(frozen=True)
class MaterialLayerConfig:
    material: MaterialSample
    y_gt: tuple | None = None      # (a, b): region y > a + b x


@dataclass(frozen=True)
class OutputConfig:
    seismograms: bool = True
    snapshot_every: int = -1       # -1: none, 0: initial+final, k: every k steps


@dataclass(frozen=True)
class RunConfig:
    name: str
    t_end: float
    degree: int
    xlim: tuple
    ylim: tuple
    cells: tuple
    cfl: float = 0.9
    solver: str = "godunov"
    bc: tuple = ("outflow", "outflow")
    lmax: int = 0
    refine_factor: int = 3
    chi_plus: float = 0.01
    chi_minus: float = 0.001
    eps0: float = 1e-3
    limiter_enabled: bool = True
    limiter_eps: float = 1e-3
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    default_material: MaterialSample = field(
        default_factory=lambda: MaterialSample(2.0, 1.0, 1.0))
    layers: tuple = ()
    initial: InitialConfig = field(default_factory=InitialConfig)
    source: SourceSpec | None = None
    receivers: tuple = ()
    output: OutputConfig = field(default_factory=OutputConfig)

    def with_thickness(self, thickness: float) -> "RunConfig":
        prof = replace(self.geometry.profile, thickness=thickness)
        return replace(self, geometry=replace(self.geometry, profile=prof))


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def build_geometry(g: GeometryConfig) -> GeometrySpec:
    if g.kind == "none":
        shape = Everywhere()
    elif g.kind == "half-space":
        shape = HalfSpace(tuple(g.point), tuple(g.normal))
    elif g.kind == "circle":
        shape = Circle(tuple(g.center), g.radius, g.solid_outside)
    elif g.kind == "height-field":
        shape = HeightField(g.base, tuple(tuple(t) for t in g.terms))
    else:
        raise ConfigError(f"geometry.kind: unknown kind '{g.kind}'")
    return GeometrySpec(shape, g.profile, g.clip)


def build_materials(cfg: RunConfig) -> MaterialLayout:
    layers = []
    for lc in cfg.layers:
        if lc.y_gt is None:
            raise ConfigError("materials.layers: a layer needs a 'y_gt' predicate")
        layers.append((HalfPlanePredicate(*lc.y_gt), lc.material))
    return MaterialLayout(default=cfg.default_material, layers=tuple(layers))


def build_initial(cfg: RunConfig):
    ic = cfg.initial
    if ic.kind == "zero":
        return None
    if ic.kind == "gaussian":
        vec = np.asarray(ic.vector, dtype=float)

        def f(xs, ys, vec=vec, x0=ic.center, w=ic.halfwidth):
            g = np.exp(-((xs - x0) / w) ** 2)
            return vec[None, None, None, :] * g[..., None]
        return f
    if ic.kind == "sine":
        vec = ic.amplitude * np.asarray(ic.vector, dtype=float)

        def f(xs, ys, vec=vec):
            g = np.sin(2.0 * np.pi * xs)
            return (vec[None, None, None, :] * g[..., None]
                    * np.ones_like(ys)[..., None])
        return f
    if ic.kind == "pwave":
        m = cfg.default_material
        cp = math.sqrt((m.lam + 2.0 * m.mu) / m.rho)
        vec = np.zeros(NQ)
        vec[0] = m.rho * cp * cp
        vec[1] = vec[2] = m.lam
        vec[6] = -cp
        vec *= ic.amplitude

        def f(xs, ys, vec=vec):
            g = np.sin(2.0 * np.pi * xs)
            return (vec[None, None, None, :] * g[..., None]
                    * np.ones_like(ys)[..., None])
        return f
    raise ConfigError(f"initial.kind: unknown kind '{ic.kind}'")


def build_simulation(cfg: RunConfig) -> Simulation:
    """Mesh construction, static refinement, sampling, and solver assembly."""
    validate(cfg)
    basis = build_basis(cfg.degree)
    geom = build_geometry(cfg.geometry)
    mats = build_materials(cfg)
    mesh = Mesh(Box((cfg.xlim[0], cfg.ylim[0]), (cfg.xlim[1], cfg.ylim[1])),
                cfg.cells, cfg.refine_factor)
    if cfg.lmax > 0:
        mesh = refine_static(mesh, alpha_mean_fn(geom, basis),
                             cfg.chi_plus, cfg.chi_minus, cfg.lmax)
    u0 = initial_state(mesh, basis, geom, mats, build_initial(cfg))
    alpha_sub = sample_alpha_subcells(mesh, basis, geom) if cfg.limiter_enabled else None
    receivers = tuple(Receiver(r.id, tuple(r.position), tuple(r.components))
                      if not isinstance(r, Receiver) else r for r in cfg.receivers)
    return Simulation(mesh, basis, u0, geometry=geom, cfl=cfg.cfl,
                      eps0=cfg.eps0, solver=cfg.solver,
                      limiter_eps=cfg.limiter_eps,
                      limiter_enabled=cfg.limiter_enabled,
                      bc=cfg.bc, source=cfg.source,
                      receivers=receivers, alpha_sub=alpha_sub)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(cfg: RunConfig):
    if cfg.t_end < 0.0:
        raise ConfigError("run.t_end: must be >= 0")
    if not 0 <= cfg.degree <= 9:
        raise ConfigError("run.degree: must be within 0..9")
    if cfg.solver not in ("godunov", "rusanov"):
        raise ConfigError(f"run.solver: unknown solver '{cfg.solver}'")
    if cfg.xlim[0] >= cfg.xlim[1]:
        raise ConfigError("domain.xlim: must be increasing")
    if cfg.ylim[0] >= cfg.ylim[1]:
        raise ConfigError("domain.ylim: must be increasing")
    if min(cfg.cells) < 1:
        raise ConfigError("domain.cells: must be >= 1 per axis")
    for b in cfg.bc:
        if b not in _BC_KINDS:
            raise ConfigError(f"domain.bc: unknown boundary kind '{b}'")
    if cfg.lmax < 0:
        raise ConfigError("amr.lmax: must be >= 0")
    if cfg.geometry.kind not in _GEOMETRY_KINDS:
        raise ConfigError(f"geometry.kind: unknown kind '{cfg.geometry.kind}'")
    if cfg.initial.kind not in _IC_KINDS:
        raise ConfigError(f"initial.kind: unknown kind '{cfg.initial.kind}'")
    if cfg.initial.kind in ("gaussian", "sine") and len(cfg.initial.vector) != NQ:
        raise ConfigError(f"initial.vector: needs {NQ} components")
    for r in cfg.receivers:
        x, y = r.position
        if not (cfg.xlim[0] <= x <= cfg.xlim[1] and cfg.ylim[0] <= y <= cfg.ylim[1]):
            raise ConfigError(f"receivers[{r.id}].position: outside the domain box")
    if cfg.source is not None:
        x, y = cfg.source.location[0], cfg.source.location[1]
        if not (cfg.xlim[0] <= x <= cfg.xlim[1] and cfg.ylim[0] <= y <= cfg.ylim[1]):
            raise ConfigError("source.location: outside the domain box")


# ---------------------------------------------------------------------------
# TOML I/O
# ---------------------------------------------------------------------------

def _need(tbl: dict, key: str, section: str):
    if key not in tbl:
        raise ConfigError(f"{section}.{key}: missing required key")
    return tbl[key]


def _material_from(tbl: dict, section: str) -> MaterialSample:
    if "cp" in tbl or "cs" in tbl:
        cp = _need(tbl, "cp", section)
        cs = _need(tbl, "cs", section)
        rho = _need(tbl, "rho", section)
        return MaterialSample.from_speeds(cp, cs, rho)
    return MaterialSample(lam=_need(tbl, "lambda", section),
                          mu=_need(tbl, "mu", section),
                          rho=_need(tbl, "rho", section))


def parse(text: str) -> RunConfig:
    """Parse a TOML run configuration."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config is not valid TOML: {e}") from None

    run = raw.get("run", {})
    dom = raw.get("domain")
    if dom is None:
        raise ConfigError("domain: missing required section")
    geo = raw.get("geometry")
    if geo is None:
        raise ConfigError("geometry: missing required section")
    mat = raw.get("materials")
    if mat is None:
        raise ConfigError("materials: missing required section")

    prof_tbl = geo.get("profile", {})
    profile = InterfaceProfile(
        thickness=prof_tbl.get("thickness", 0.0),
        eta=prof_tbl.get("eta", -0.6),
        shape_exponent=prof_tbl.get("shape_exponent", 0.5))
    clip = None
    if "clip" in geo:
        c = geo["clip"]
        clip = ClipBox(
            xlim=(c.get("xmin", -math.inf), c.get("xmax", math.inf)),
            ylim=(c.get("ymin", -math.inf), c.get("ymax", math.inf)))
    gcfg = GeometryConfig(
        kind=_need(geo, "kind", "geometry"),
        point=tuple(geo.get("point", (0.0, 0.0))),
        normal=tuple(geo.get("normal", (1.0, 0.0))),
        center=tuple(geo.get("center", (0.0, 0.0))),
        radius=geo.get("radius", 1.0),
        solid_outside=geo.get("solid_outside", True),
        base=geo.get("base", 0.0),
        terms=tuple(tuple(t) for t in geo.get("terms", ())),
        profile=profile, clip=clip)

    layers = tuple(
        MaterialLayerConfig(material=_material_from(l, "materials.layers"),
                            y_gt=tuple(l["y_gt"]) if "y_gt" in l else None)
        for l in mat.get("layers", ()))

    ini_tbl = raw.get("initial", {})
    initial = InitialConfig(
        kind=ini_tbl.get("kind", "zero"),
        vector=tuple(ini_tbl.get("vector", ())),
        amplitude=ini_tbl.get("amplitude", 1.0),
        center=ini_tbl.get("center", 0.0),
        halfwidth=ini_tbl.get("halfwidth", 1.0))

    source = None
    if "source" in raw and raw["source"].get("enabled", True):
        s = raw["source"]
        source = SourceSpec(
            location=tuple(_need(s, "location", "source")),
            direction=tuple(_need(s, "direction", "source")),
            amplitude=_need(s, "amplitude", "source"),
            center_frequency=_need(s, "center_frequency", "source"),
            delay=_need(s, "delay", "source"))

    receivers = tuple(
        Receiver(id=str(_need(r, "id", "receivers")),
                 position=tuple(_need(r, "position", "receivers")),
                 components=tuple(r.get("components", ("u", "v"))))
        for r in raw.get("receivers", ()))

    amr = raw.get("amr", {})
    reg = raw.get("regularization", {})
    limt = raw.get("limiter", {})
    out = raw.get("output", {})
    cfg = RunConfig(
        name=run.get("name", "run"),
        t_end=_need(run, "t_end", "run"),
        degree=_need(run, "degree", "run"),
        cfl=run.get("cfl", 0.9),
        solver=run.get("solver", "godunov"),
        xlim=tuple(_need(dom, "xlim", "domain")),
        ylim=tuple(_need(dom, "ylim", "domain")),
        cells=tuple(_need(dom, "cells", "domain")),
        bc=(dom.get("bc_x", "outflow"), dom.get("bc_y", "outflow")),
        lmax=amr.get("lmax", 0),
        refine_factor=amr.get("refine_factor", 3),
        chi_plus=amr.get("chi_plus", 0.01),
        chi_minus=amr.get("chi_minus", 0.001),
        eps0=reg.get("eps0", 1e-3),
        limiter_enabled=limt.get("enabled", True),
        limiter_eps=limt.get("eps", 1e-3),
        geometry=gcfg,
        default_material=_material_from(mat, "materials"),
        layers=layers,
        initial=initial,
        source=source,
        receivers=receivers,
        output=OutputConfig(seismograms=out.get("seismograms", True),
                            snapshot_every=out.get("snapshot_every", -1)))
    validate(cfg)
    return cfg


def load(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse(f.read())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump(cfg: RunConfig) -> str:
    """Serialize a RunConfig to TOML; parse(dump(cfg)) reproduces it."""
    ls = []

    def sec(name, pairs, array=False):
        ls.append(f"[[{name}]]" if array else f"[{name}]")
        for k, v in pairs:
            if v is not None:
                ls.append(f"{k} = {_fmt(v)}")
        ls.append("")

    sec("run", [("name", cfg.name), ("t_end", cfg.t_end), ("degree", cfg.degree),
                ("cfl", cfg.cfl), ("solver", cfg.solver)])
    sec("domain", [("xlim", list(cfg.xlim)), ("ylim", list(cfg.ylim)),
                   ("cells", list(cfg.cells)), ("bc_x", cfg.bc[0]),
                   ("bc_y", cfg.bc[1])])
    sec("amr", [("lmax", cfg.lmax), ("refine_factor", cfg.refine_factor),
                ("chi_plus", cfg.chi_plus), ("chi_minus", cfg.chi_minus)])
    sec("regularization", [("eps0", cfg.eps0)])
    sec("limiter", [("enabled", cfg.limiter_enabled), ("eps", cfg.limiter_eps)])

    g = cfg.geometry
    pairs = [("kind", g.kind)]
    if g.kind == "half-space":
        pairs += [("point", list(g.point)), ("normal", list(g.normal))]
    elif g.kind == "circle":
        pairs += [("center", list(g.center)), ("radius", g.radius),
                  ("solid_outside", g.solid_outside)]
    elif g.kind == "height-field":
        pairs += [("base", g.base), ("terms", [list(t) for t in g.terms])]
    sec("geometry", pairs)
    sec("geometry.profile", [("thickness", g.profile.thickness),
                             ("eta", g.profile.eta),
                             ("shape_exponent", g.profile.shape_exponent)])
    if g.clip is not None:
        pairs = []
        for key, v in (("xmin", g.clip.xlim[0]), ("xmax", g.clip.xlim[1]),
                       ("ymin", g.clip.ylim[0]), ("ymax", g.clip.ylim[1])):
            if math.isfinite(v):
                pairs.append((key, v))
        sec("geometry.clip", pairs)

    m = cfg.default_material
    sec("materials", [("lambda", m.lam), ("mu", m.mu), ("rho", m.rho)])
    for lc in cfg.layers:
        sec("materials.layers", [("lambda", lc.material.lam), ("mu", lc.material.mu),
                                 ("rho", lc.material.rho),
                                 ("y_gt", list(lc.y_gt))], array=True)

    ic = cfg.initial
    pairs = [("kind", ic.kind)]
    if ic.kind == "gaussian":
        pairs += [("vector", list(ic.vector)), ("center", ic.center),
                  ("halfwidth", ic.halfwidth)]
    elif ic.kind == "sine":
        pairs += [("vector", list(ic.vector)), ("amplitude", ic.amplitude)]
    elif ic.kind == "pwave":
        pairs += [("amplitude", ic.amplitude)]
    sec("initial", pairs)

    if cfg.source is not None:
        s = cfg.source
        sec("source", [("enabled", True), ("location", list(s.location)),
                       ("direction", list(s.direction)), ("amplitude", s.amplitude),
                       ("center_frequency", s.center_frequency), ("delay", s.delay)])

    for r in cfg.receivers:
        sec("receivers", [("id", r.id), ("position", list(r.position)),
                          ("components", list(r.components))], array=True)

    sec("output", [("seismograms", cfg.output.seismograms),
                   ("snapshot_every", cfg.output.snapshot_every)])
    return "\n".join(ls)
