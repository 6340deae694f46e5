"""Run artifacts: seismogram CSVs, legacy-VTK snapshots, run manifest."""

from __future__ import annotations

import json
import os

import numpy as np

from . import pde
from .solver import Simulation
from .state import ALPHA, AU, LAM, MU, RHO


def write_seismograms(sim: Simulation, outdir: str):
    """One CSV per receiver: header 't,<components>', one row per step."""
    paths = []
    for rec, _, _ in sim.receivers:
        path = os.path.join(outdir, f"{rec.id}.csv")
        rows = sim.seismograms[rec.id]
        with open(path, "w", encoding="ascii") as f:
            f.write("t," + ",".join(rec.components) + "\n")
            for row in rows:
                f.write(",".join(repr(float(v)) for v in row) + "\n")
        paths.append(path)
    return paths


def write_manifest(sim: Simulation, result: dict, outdir: str, name: str = "run"):
    path = os.path.join(outdir, "manifest.json")
    payload = dict(result)
    payload["name"] = name
    payload["sum_dt"] = float(np.sum(result["dt_history"]))
    with open(path, "w", encoding="ascii") as f:
        json.dump(payload, f, indent=1)
    return path


def write_snapshot(sim: Simulation, path: str):
    """Legacy ASCII VTK unstructured snapshot of all leaf cells.

    Point data: the six stress components, physical velocities, alpha and
    the material fields; cell data: refinement level and limiter flag.
    Points are the (N+1)^2 tensor nodes per leaf, connected into N^2 quads.
    """
    mesh, basis = sim.mesh, sim.basis
    n = basis.n
    nc = mesh.n_cells
    npts_cell = n * n
    nquads_cell = (n - 1) * (n - 1)

    xs = mesh.origin[:, 0, None] + mesh.h[:, 0, None] * basis.nodes[None, :]
    ys = mesh.origin[:, 1, None] + mesh.h[:, 1, None] * basis.nodes[None, :]

    inv_a = pde.inv_alpha_reg(np.clip(sim.u[..., ALPHA], 0.0, 1.0), sim.eps0)
    fields = [("sigma_xx", sim.u[..., 0]), ("sigma_yy", sim.u[..., 1]),
              ("sigma_zz", sim.u[..., 2]), ("sigma_xy", sim.u[..., 3]),
              ("sigma_yz", sim.u[..., 4]), ("sigma_xz", sim.u[..., 5]),
              ("u", sim.u[..., AU] * inv_a), ("v", sim.u[..., AU + 1] * inv_a),
              ("w", sim.u[..., AU + 2] * inv_a), ("alpha", sim.u[..., ALPHA]),
              ("lambda", sim.u[..., LAM]), ("mu", sim.u[..., MU]),
              ("rho", sim.u[..., RHO])]

    with open(path, "w", encoding="ascii") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"dimwave snapshot t={sim.t!r}\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {nc * npts_cell} double\n")
        for c in range(nc):
            for a in range(n):
                for b in range(n):
                    f.write(f"{float(xs[c, a])!r} {float(ys[c, b])!r} 0.0\n")
        ncell = nc * nquads_cell
        f.write(f"CELLS {ncell} {5 * ncell}\n")
        for c in range(nc):
            base = c * npts_cell
            for a in range(n - 1):
                for b in range(n - 1):
                    p0 = base + a * n + b
                    f.write(f"4 {p0} {p0 + n} {p0 + n + 1} {p0 + 1}\n")
        f.write(f"CELL_TYPES {ncell}\n")
        f.write("\n".join(["9"] * ncell) + "\n")

        f.write(f"POINT_DATA {nc * npts_cell}\n")
        for name, data in fields:
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for c in range(nc):
                for a in range(n):
                    for b in range(n):
                        f.write(f"{float(data[c, a, b])!r}\n")

        f.write(f"CELL_DATA {ncell}\n")
        for name, data in (("level", sim.mesh.level),
                           ("limited", sim.flags.astype(int))):
            f.write(f"SCALARS {name} int 1\nLOOKUP_TABLE default\n")
            for c in range(nc):
                f.write((f"{int(data[c])}\n") * nquads_cell)
    return path


def run_config(cfg, outdir: str, progress=None) -> dict:
    """Execute a RunConfig: advance to t_end and write all artifacts."""
    from .config import build_simulation

    os.makedirs(outdir, exist_ok=True)
    sim = build_simulation(cfg)
    every = cfg.output.snapshot_every
    snap_idx = [0]

    def snap():
        path = os.path.join(outdir, f"{cfg.name}_{snap_idx[0]:04d}.vtk")
        write_snapshot(sim, path)
        snap_idx[0] += 1

    if every >= 0:
        snap()

    def on_step(s):
        if every > 0 and s.step_count % every == 0:
            snap()
        if progress is not None:
            progress(s)

    result = sim.advance(cfg.t_end, on_step=on_step)
    if every >= 0 and sim.step_count > 0:
        snap()
    if cfg.output.seismograms:
        write_seismograms(sim, outdir)
    write_manifest(sim, result, outdir, cfg.name)
    result["sim"] = sim
    return result
