"""Command line front end.

Subcommands: run (a dynamics scenario or sweep), bands (band structure
only), list-presets, dump-config.  Exit codes: 0 success, 1 configuration
error, 2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, NumericalError
from .scenario import (config_to_dict, list_presets, load_config,
                       override_config, preset_config, run, run_bands,
                       run_sweep, serialize_config)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; that code is reserved for
    # numerical failures here, so usage errors become config errors.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="doublonlab",
                     description="triggered two-photon emission simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario or a sweep")
    p_run.add_argument("--config", help="path to a scenario JSON file")
    p_run.add_argument("--preset", help="name of a built-in scenario")
    p_run.add_argument("--out", help="output bundle directory")
    p_run.add_argument("--n-cells", type=int, dest="n_cells",
                       help="override the chain length, recentering the emitter")
    p_run.add_argument("--tmax", type=float, help="override the final time")
    p_run.add_argument("--tol", type=float, help="override the propagator tolerance")
    p_run.add_argument("--sweep", help="grid JSON; runs every point into --out")

    p_bands = sub.add_parser("bands", help="band structure of a config's lattice")
    p_bands.add_argument("--config", help="path to a scenario JSON file")
    p_bands.add_argument("--preset", help="name of a built-in scenario")
    p_bands.add_argument("--out", help="output bundle directory")

    sub.add_parser("list-presets", help="names and descriptions")

    p_dump = sub.add_parser("dump-config", help="print a preset's config JSON")
    p_dump.add_argument("name")
    return parser


def _load(args) -> "ScenarioConfig":
    if (args.config is None) == (args.preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    if args.config is not None:
        return load_config(args.config)
    return preset_config(args.preset)


def _cmd_run(args) -> None:
    if args.sweep is not None:
        if args.config or args.preset:
            raise ConfigError("--sweep carries its own base config; "
                              "drop --config/--preset")
        if args.out is None:
            raise ConfigError("--sweep requires --out")
        done = run_sweep(args.sweep, args.out)
        print(f"sweep complete: {len(done)} points under {args.out}")
        return
    cfg = _load(args)
    cfg = override_config(cfg, n_cells=args.n_cells, t_max=args.tmax,
                          tolerance=args.tol)
    result = run(cfg, args.out, progress=lambda s: print(s, file=sys.stderr))
    if cfg.mode == "bands":
        print(f"{cfg.name}: band ranges {result.derived['band_ranges']}")
        return
    line = (f"{cfg.name}: dim={result.certificates['dimension']} "
            f"P_e(end)={result.series('P_e')[-1]:.6f} "
            f"norm_drift={result.certificates['norm_drift']:.2e}")
    fit = result.derived.get("fit")
    if fit is not None:
        res = result.derived["resonance"]
        line += (f" gamma_fit={fit['gamma_fitted']:.6g}"
                 f" gamma_analytic={res['gamma_analytic']:.6g}"
                 f" deviation={fit['relative_deviation']:.2%}")
    print(line)
    if result.out_dir is not None:
        print(f"bundle written to {result.out_dir}")


def _cmd_bands(args) -> None:
    cfg = _load(args)
    derived = run_bands(cfg, args.out)
    print(f"{cfg.name}: band ranges {derived['band_ranges']}")
    if args.out is not None:
        print(f"bands.csv written to {args.out}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            _cmd_run(args)
        elif args.command == "bands":
            _cmd_bands(args)
        elif args.command == "list-presets":
            for name, desc in list_presets():
                print(f"{name:22s} {desc}")
        elif args.command == "dump-config":
            sys.stdout.write(serialize_config(preset_config(args.name)))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
