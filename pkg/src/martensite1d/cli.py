"""
Command-line entry point.

Exit codes: 0 success, 1 a monitored invariant failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import studies
from .config import default_config, load_config
from .errors import ConfigError, IncompatibleData, Martensite1DError

log = logging.getLogger("martensite1d")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="configuration file (default: shipped scenario)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="seed of the viscosity-check sampler")
    common.add_argument("--kappa", type=float, help="override kappa")
    common.add_argument("--grid", type=int, help="override the number of nodes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="martensite1d", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="single coupled run")
    sub.add_parser("kappa-study", parents=[common], help="kappa continuation and viscosity check")
    sub.add_parser("grid-study", parents=[common], help="self-convergence on nested grids")
    sub.add_parser("sharp-compare", parents=[common], help="diffuse fronts against the sharp-interface ODE")
    sub.add_parser("check", parents=[common], help="invariant suite on a configuration")
    return parser


def _resolve_config(args):
    cfg = load_config(args.config) if args.config else default_config()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.kappa is not None:
        changes["kappa"] = args.kappa
    if args.grid is not None:
        changes["nodes"] = args.grid
    return cfg.replace(**changes) if changes else cfg


def _report(items: dict) -> bool:
    ok = True
    for k, v in items.items():
        if isinstance(v, bool):
            ok &= v
            v = "pass" if v else "fail"
        print(f"{k:32s} {v}")
    return ok


def _dispatch(args, cfg) -> bool:
    out = args.out
    if args.command == "run":
        res = studies.run_simulation(cfg, out)
        return _report({**res.report.summary, **res.monitors})
    if args.command == "kappa-study":
        res = studies.kappa_study(cfg, out)
        return _report(studies.kappa_summary(res))
    if args.command == "grid-study":
        res = studies.grid_study(cfg, out)
        for N, err in zip(res.nodes, res.errors):
            print(f"nodes {N:6d}  error to next {err:.6e}")
        for p in res.orders:
            print(f"observed order {p:.4f}")
        return True
    if args.command == "sharp-compare":
        res = studies.sharp_compare(cfg, out)
        for nu, es, em in zip(res.nus, res.stationary_error, res.moving_error):
            print(f"nu {nu:.4g}  stationary error {es:.3e}  moving error {em:.3e}")
        return _report({"stationary_within_dx": res.stationary_ok, "moving_error_decreasing": res.moving_decreasing})
    if args.command == "check":
        return _report(studies.check(cfg, out))
    raise AssertionError(args.command)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    where = str(args.config) if args.config else "default.cfg"
    try:
        cfg = _resolve_config(args)
        ok = _dispatch(args, cfg)
    except (ConfigError, IncompatibleData) as exc:
        print(f"martensite1d: configuration error ({where}): {exc}", file=sys.stderr)
        return 2
    except Martensite1DError as exc:
        print(f"martensite1d: {type(exc).__name__} ({where}): {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
