"""Command line driver: ``ctrw-patterns run|validate|figures``.

Exit codes: 0 success, 1 computation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .analysis import DisconnectedError, NotSteadyError, SingularSystemError
from .config import ConfigError, load_config
from .dynamics import IntegrationError
from .eigen import EigenConvergenceError
from .kinetics import DomainError
from .laplacian import LaplacianError
from .network import EdgeListError, GenerationFailed
from .runner import NoTuringWindow, run_experiment

OK, COMPUTATION_FAILED, CONFIG_ERROR = 0, 1, 2

COMPUTATION_ERRORS = (IntegrationError, SingularSystemError, EigenConvergenceError, NotSteadyError,
                      DisconnectedError, GenerationFailed, DomainError, LaplacianError, NoTuringWindow)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctrw-patterns", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute one experiment config")
    run.add_argument("config")
    run.add_argument("--out", help="override the config's output directory")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    fig = sub.add_parser("figures", help="write the data tables behind every figure panel")
    fig.add_argument("--size", type=int, choices=(50, 500), default=50)
    fig.add_argument("--out", default="figures")
    fig.add_argument("--workers", type=int, default=None, help="parallel sub-runs (default: CPU count)")
    return p


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        for path_, msg in exc.problems:
            print(f"config error: {path_}: {msg}", file=sys.stderr)
        return None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "validate":
        cfg = _load(args.config)
        if cfg is None:
            return CONFIG_ERROR
        print(f"{args.config}: ok ({cfg.kind}, {cfg.network.generator}, {cfg.laplacian.variant}, {cfg.kinetics.model})")
        return OK

    if args.command == "run":
        cfg = _load(args.config)
        if cfg is None:
            return CONFIG_ERROR
        try:
            result = run_experiment(cfg, args.out)
        except EdgeListError as exc:
            print(f"config error: network.path: {exc}", file=sys.stderr)
            return CONFIG_ERROR
        except COMPUTATION_ERRORS as exc:
            print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return COMPUTATION_FAILED
        print(f"wrote {', '.join(result.files)} to {result.output_dir}")
        return OK

    from .figures import reproduce_figures

    tables, failures = reproduce_figures(args.size, args.out, args.workers)
    if failures:
        for name, err in sorted(failures.items()):
            print(f"{name}: {err}", file=sys.stderr)
        print(f"figure batch aborted: {len(failures)} sub-run(s) failed", file=sys.stderr)
        return COMPUTATION_FAILED
    print(f"wrote {len(tables)} tables to {args.out}")
    return OK


if __name__ == "__main__":
    sys.exit(main())
