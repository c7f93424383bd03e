"""Command-line interface.

Commands:
  run <config> [--out DIR] [--seed N]   execute a scenario, write artifacts
  fdcheck <config> [--probes N]         verify chained gradients vs FD
  mesh gen [...]                        generate a mesh file
  mesh info <file>                      print mesh statistics

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .fem import FemError
from .mesh import MeshError, generate_plate_with_hole, generate_rect_grid, load_mesh, save_mesh
from .runner import fd_verify, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermofit",
        description="Joint stiffness and thermal-load identification from sparse sensors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config end to end")
    p_run.add_argument("config", help="path to the scenario YAML")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None, help="noise RNG seed")

    p_fd = sub.add_parser("fdcheck", help="finite-difference gradient verification")
    p_fd.add_argument("config", help="path to the scenario YAML")
    p_fd.add_argument("--probes", type=int, default=5)
    p_fd.add_argument("--seed", type=int, default=0)

    p_mesh = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = p_mesh.add_subparsers(dest="mesh_command", required=True)

    p_gen = mesh_sub.add_parser("gen", help="generate a mesh file")
    p_gen.add_argument("--kind", choices=("rect", "plate_with_hole"), required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--nx", type=int, default=10)
    p_gen.add_argument("--ny", type=int, default=5)
    p_gen.add_argument("--lx", type=float, default=60.0)
    p_gen.add_argument("--ly", type=float, default=30.0)
    p_gen.add_argument("--hole-x", type=float, default=30.0)
    p_gen.add_argument("--hole-y", type=float, default=15.0)
    p_gen.add_argument("--hole-diameter", type=float, default=10.0)
    p_gen.add_argument("--target-elements", type=int, default=646)

    p_info = mesh_sub.add_parser("info", help="print mesh statistics")
    p_info.add_argument("file")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "fdcheck":
            return _cmd_fdcheck(args)
        if args.command == "mesh":
            return _cmd_mesh(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FemError, MeshError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_scenario(cfg, out_dir=args.out, seed=args.seed)
    print(f"scenario: {cfg.scenario}")
    for key in (
        "iterations", "final_j", "eps_e_final", "delta_eps_e_pct",
        "eps_t_final", "delta_eps_t_pct",
    ):
        if key in result.summary:
            print(f"{key}: {result.summary[key]}")
    print(f"artifacts: {result.out_dir}")
    return EXIT_OK


def _cmd_fdcheck(args) -> int:
    cfg = load_config(args.config)
    deviations = fd_verify(cfg, probes=args.probes, seed=args.seed)
    ok = True
    for name, dev in deviations.items():
        status = "OK" if dev <= 1e-5 else "FAIL"
        ok = ok and dev <= 1e-5
        print(f"{name}: max relative deviation {dev:.3e} [{status}]")
    return EXIT_OK if ok else EXIT_SOLVER


def _cmd_mesh(args) -> int:
    if args.mesh_command == "gen":
        if args.kind == "rect":
            mesh = generate_rect_grid(args.nx, args.ny, args.lx, args.ly)
        else:
            mesh = generate_plate_with_hole(
                args.lx, args.ly, (args.hole_x, args.hole_y),
                args.hole_diameter, args.target_elements,
            )
        Path(args.out).write_text(save_mesh(mesh))
        print(f"wrote {mesh.n_nodes} nodes, {mesh.n_elements} triangles to {args.out}")
        return EXIT_OK
    mesh = load_mesh(Path(args.file).read_text())
    print(f"nodes: {mesh.n_nodes}")
    print(f"triangles: {mesh.n_elements}")
    print(f"total area: {mesh.total_area():.6g}")
    for name, idx in sorted(mesh.boundary_tags.items()):
        print(f"tag {name}: {len(idx)} nodes")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
