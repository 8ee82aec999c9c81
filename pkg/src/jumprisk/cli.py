"""Command-line entry point: ``jumprisk <command> [--config PATH] [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure.
Failures print a one-line JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import RunConfig
from .data import ConfigError
from .io import SchemaError
from .pipeline import STAGES, StageInputError, run_pipeline

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"stage": "cli", "error": "UsageError", "message": message}), file=sys.stderr)
        sys.exit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jumprisk", description="Topic-based jump risk pipeline")
    p.add_argument("command", choices=STAGES + ("all",))
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _fail(stage: str, exc: BaseException, code: int) -> int:
    err = {"stage": stage, "error": type(exc).__name__, "message": str(exc)}
    path = getattr(exc, "path", None) or getattr(exc, "filename", None)
    if path:
        err["path"] = str(path)
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        cfg.validate()
    except (ConfigError, TypeError) as exc:
        return _fail("config", exc, EXIT_VALIDATION)
    try:
        run_pipeline(cfg, args.command)
    except StageInputError as exc:
        return _fail(exc.stage, exc, EXIT_VALIDATION)
    except (ConfigError, SchemaError) as exc:
        return _fail(getattr(exc, "stage", args.command), exc, EXIT_VALIDATION)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        return _fail(getattr(exc, "stage", args.command), exc, EXIT_RUNTIME)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
