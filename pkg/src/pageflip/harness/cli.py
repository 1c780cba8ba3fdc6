"""Command line: ``pageflip run|sweep|plot|replay``.

Exit status 0 means the run succeeded, 2 a controlled failure (trial
limit, timeout, lost contact, replay mismatch) and 1 a configuration or
I/O problem.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from ..errors import ConfigError
from .config import ExperimentConfig, load_config
from .plots import emit_plots
from .runner import expand_grid, read_trace, replay, run, sweep, write_trace

OK, FAILED, BAD_INPUT = 0, 2, 1


def _config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.max_cycles is not None:
        overrides["max_cycles"] = args.max_cycles
    return config.replace(overrides) if overrides else config


def _out(args, config) -> Path:
    return Path(args.out) if args.out else Path(config.output.directory)


def _report(trace, directory):
    s = trace.summary
    print(json.dumps({"dir": str(directory), "success": s.get("success"), "error": s.get("error"),
                      "P1_des": s.get("P1_des"), "Theta": s.get("Theta"), "X_c": s.get("X_c")}))


def cmd_run(args) -> int:
    config = _config(args)
    trace = run(config)
    directory = write_trace(trace, _out(args, config), config.output.csv)
    if not args.no_plots:
        emit_plots(trace, directory)
    _report(trace, directory)
    return OK if trace.success else FAILED


def cmd_sweep(args) -> int:
    config = _config(args)
    try:
        grid = yaml.safe_load(Path(args.grid).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read grid {args.grid}: {exc}") from exc
    expand_grid(grid)
    out = _out(args, config)
    traces = sweep(config, grid, args.workers)
    for trace in traces:
        if trace.config_hash:
            directory = write_trace(trace, out, config.output.csv)
            if not args.no_plots:
                emit_plots(trace, directory)
        else:
            directory = None
        _report(trace, directory)
    return OK if all(t.success for t in traces) else FAILED


def cmd_plot(args) -> int:
    trace = read_trace(args.trace_dir)
    for path in emit_plots(trace, Path(args.out) if args.out else Path(args.trace_dir)):
        print(path)
    return OK


def cmd_replay(args) -> int:
    same, _ = replay(args.trace_dir)
    print("identical" if same else "MISMATCH")
    return OK if same else FAILED


def parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--max-cycles", type=int)
    common.add_argument("--no-plots", action="store_true")
    p = argparse.ArgumentParser(prog="pageflip", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="one experiment")
    r.add_argument("config", nargs="?")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", parents=[common], help="one run per grid point")
    s.add_argument("config", nargs="?")
    s.add_argument("--grid", required=True)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)
    pl = sub.add_parser("plot", help="SVG figures for a stored trace")
    pl.add_argument("trace_dir")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    rp = sub.add_parser("replay", help="re-run a stored trace and compare")
    rp.add_argument("trace_dir")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
