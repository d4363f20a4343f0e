"""
Command line entry point::

    gammafrac <mode> --config <path> [--out <dir>] [--seed <n>] [--threads <n>]

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 config
error.  Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import _accel
from .errors import (AccuracyError, ConfigError, GammaFracError, InfeasibleSigmaError,
                     InfeasibleStateError, InputError, NumericRecessionError,
                     SolverBreakdownError, TubeOverlapError)
from .scenario import MODES, load_scenario, run

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_CONFIG = 0, 2, 3, 4

# (error class, exit code, hint); first match wins
_ERROR_TABLE = [
    (InfeasibleSigmaError, EXIT_VALIDATION,
     "the potential violates the sigma bound; inspect it with the sigma-bound mode"),
    (TubeOverlapError, EXIT_VALIDATION, "use smaller eps values"),
    (SolverBreakdownError, EXIT_NUMERIC, "check the potential with the sigma-bound mode"),
    (InfeasibleStateError, EXIT_NUMERIC, None),
    (AccuracyError, EXIT_NUMERIC, None),
    (NumericRecessionError, EXIT_NUMERIC, None),
    (ConfigError, EXIT_CONFIG, None),
    (InputError, EXIT_CONFIG, None),
    (GammaFracError, EXIT_NUMERIC, None),
]


def error_payload(exc):
    """Exit code and JSON body for an exception."""
    for cls, code, hint in _ERROR_TABLE:
        if isinstance(exc, cls):
            body = {"error": exc.code, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
            if hint:
                body["hint"] = hint
            return code, body
    return EXIT_NUMERIC, {"error": "internal_error", "type": type(exc).__name__,
                          "message": str(exc), "exit_code": EXIT_NUMERIC}


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def build_parser():
    p = _Parser(prog="gammafrac", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="overrides run.seed")
    p.add_argument("--threads", type=int, default=None,
                   help="kernel threads (fallback: GAMMAFRAC_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        _emit({"error": "usage", "type": "UsageError", "message": str(exc), "exit_code": EXIT_CONFIG})
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    if threads is None and os.environ.get("GAMMAFRAC_THREADS"):
        try:
            threads = int(os.environ["GAMMAFRAC_THREADS"])
        except ValueError:
            _emit({"error": "config_error", "type": "ConfigError",
                   "message": "GAMMAFRAC_THREADS must be an integer", "exit_code": EXIT_CONFIG})
            return EXIT_CONFIG
    if threads is not None:
        if threads < 1:
            _emit({"error": "config_error", "type": "ConfigError",
                   "message": "--threads must be positive", "exit_code": EXIT_CONFIG})
            return EXIT_CONFIG
        _accel.set_threads(threads)
    try:
        sc = load_scenario(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            sc.seed = args.seed
        outcome = run(sc, args.mode, args.out)
    except Exception as exc:  # every failure becomes a JSON record
        code, body = error_payload(exc)
        _emit(body)
        return code
    for line in outcome.lines:
        print(line)
    print(json.dumps(_jsonable(outcome.summary), sort_keys=True))
    return outcome.exit_code


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and obj != obj:
        return None
    if isinstance(obj, float) and obj in (float("inf"), float("-inf")):
        return str(obj)
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def _emit(body):
    sys.stderr.write(json.dumps(body, sort_keys=True) + "\n")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
