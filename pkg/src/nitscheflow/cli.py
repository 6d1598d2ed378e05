"""Command-line driver.

nitsche-flow run --case <name> [--config file] [--set key=value ...] --out dir
nitsche-flow compare --a dir --b dir --scale s
nitsche-flow mesh --case <name> --level n --out file

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys

from .cases import compare_runs, resolve_config, run_case
from .forms import ConfigurationError
from .output import read_manifest
from .solver import NewtonDivergenceError, SingularSystemError


def _parse_sets(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigurationError(
                f"--set expects section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, name = key.split(".", 1)
        out.setdefault(section.strip(), {})[name.strip()] = value.strip()
    return out


def main(argv=None):
    p = argparse.ArgumentParser(prog="nitsche-flow")
    sub = p.add_subparsers(dest="cmd", required=True)

    pr = sub.add_parser("run", help="run a benchmark case")
    pr.add_argument("--case", required=True)
    pr.add_argument("--config", default=None)
    pr.add_argument("--set", dest="sets", action="append", default=[],
                    metavar="section.key=value")
    pr.add_argument("--out", required=True)

    pc = sub.add_parser("compare", help="scaled comparison of two runs")
    pc.add_argument("--a", required=True)
    pc.add_argument("--b", required=True)
    pc.add_argument("--scale", type=float, required=True)

    pm = sub.add_parser("mesh", help="write a case mesh to a file")
    pm.add_argument("--case", required=True)
    pm.add_argument("--level", type=int, default=0)
    pm.add_argument("--out", required=True)

    args = p.parse_args(argv)
    try:
        if args.cmd == "run":
            file_cfg = read_manifest(args.config) if args.config else None
            cfg = resolve_config(args.case, file_cfg, _parse_sets(args.sets))
            run_case(cfg, args.out)
            print(f"run complete: {args.out}")
        elif args.cmd == "compare":
            dev = compare_runs(args.a, args.b, args.scale)
            print(f"max relative axis-pressure deviation: {dev:.6e}")
        elif args.cmd == "mesh":
            from . import mesh as meshmod
            gens = {
                "kovasznay": lambda lvl: _kov_mesh(lvl),
                "standing_vortex": lambda lvl: meshmod.generate_square_vortex(lvl),
                "bfs": lambda lvl: meshmod.generate_bfs(resolution=lvl + 1),
                "cylinder": lambda lvl: meshmod.generate_cylinder_channel(2.2, lvl),
                "fraenkel": lambda lvl: meshmod.generate_fraenkel(resolution=lvl),
                "jet": lambda lvl: meshmod.generate_T_jet(level=lvl),
            }
            if args.case not in gens:
                raise ConfigurationError(f"unknown case {args.case!r}")
            meshmod.write_mesh(gens[args.case](args.level), args.out)
            print(f"mesh written: {args.out}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NewtonDivergenceError, SingularSystemError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 0


def _kov_mesh(level):
    from .cases import Kovasznay
    return Kovasznay(0.025).mesh(level)


if __name__ == "__main__":
    sys.exit(main())
