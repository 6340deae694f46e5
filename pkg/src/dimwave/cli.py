"""Command line front end: run configs, dump scenarios, convergence study."""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np


def _cmd_run(args) -> int:
    from . import config as cfgmod
    from .output import run_config
    from .scenarios import scenario, scenario_names

    if args.config in scenario_names():
        cfg = scenario(args.config)
    else:
        cfg = cfgmod.load(args.config)
    if args.solver:
        from dataclasses import replace
        cfg = replace(cfg, solver=args.solver)
    if args.threads:
        try:
            import numba
            numba.set_num_threads(args.threads)
        except (ImportError, ValueError):
            pass
    outdir = args.output_dir or cfg.name

    t0 = time.perf_counter()
    last = [0.0]

    def progress(sim):
        if time.perf_counter() - last[0] > 5.0:
            last[0] = time.perf_counter()
            print(f"  t = {sim.t:.6g} / {cfg.t_end}  step {sim.step_count}",
                  flush=True)

    print(f"running '{cfg.name}' -> {outdir}")
    result = run_config(cfg, outdir, progress=progress)
    print(f"done: {result['steps']} steps, {result['n_cells']} cells "
          f"({result['n_flagged']} limited), wall {time.perf_counter() - t0:.1f} s")
    return 0


def _cmd_scenario(args) -> int:
    from .config import dump
    from .scenarios import scenario, scenario_names

    if args.name is None:
        print("\n".join(scenario_names()))
        return 0
    cfg = scenario(args.name)
    if args.dump:
        print(dump(cfg))
    else:
        print(f"{cfg.name}: degree N={cfg.degree}, cells {cfg.cells}, "
              f"lmax={cfg.lmax}, t_end={cfg.t_end}, "
              f"I_D={cfg.geometry.profile.thickness}")
    return 0


def _cmd_convergence(args) -> int:
    from .convergence import pwave_convergence

    rows = pwave_convergence(args.degree, args.levels)
    print(f"periodic p-wave, degree N = {args.degree}")
    print(f"{'cells':>8} {'rel L2':>14} {'order':>8}")
    prev = None
    for ncell, err in rows:
        order = "" if prev is None else f"{math.log2(prev / err):8.3f}"
        print(f"{ncell:8d} {err:14.6e} {order:>8}")
        prev = err
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="dimwave",
        description="Diffuse-interface ADER-DG solver for linear elastic waves")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config file or named scenario")
    p_run.add_argument("config", help="path to a TOML config, or a scenario name")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--solver", choices=("godunov", "rusanov"), default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_sc = sub.add_parser("scenario", help="list scenarios or dump one as TOML")
    p_sc.add_argument("name", nargs="?", default=None)
    p_sc.add_argument("--dump", action="store_true",
                      help="print the full TOML parameterization")
    p_sc.set_defaults(func=_cmd_scenario)

    p_cv = sub.add_parser("convergence",
                          help="grid convergence study on the periodic p-wave")
    p_cv.add_argument("degree", type=int)
    p_cv.add_argument("levels", type=int)
    p_cv.set_defaults(func=_cmd_convergence)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
