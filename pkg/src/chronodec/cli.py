"""Run real-clock decoherence experiments and evaluate closed-form bounds.

    chronodec run <config-file> [--out DIR] [--format csv,json,svg]
    chronodec validate <config-file>
    chronodec bounds <op> --flag value ...

Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import BOUND_ARGS, FORMATS, parse_config
from .errors import ChronodecError, ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError("E_SYNTAX", f"cannot read {path!r}: {exc.strerror}") from exc


def _formats(text: str | None):
    if text is None:
        return None
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise ConfigError("E_VALUE", f"unsupported formats {bad or text!r}; choose from {list(FORMATS)}")
    return fmts


def _parse_flag_value(raw: str):
    """Numbers become floats/ints, everything else stays a string."""
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def _bounds_params(op: str, extra: list[str]) -> dict:
    params: dict = {"op": op}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError("E_SYNTAX", f"expected --flag, got {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, raw = key.split("=", 1)
        else:
            raw = next(it, None)
            if raw is None:
                raise ConfigError("E_MISSING_KEY", f"flag --{key} needs a value", key=key)
        params[key] = _parse_flag_value(raw)
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chronodec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"chronodec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (overrides CHRONODEC_OUT)")
    p_run.add_argument("--format", default=None, help="comma-separated subset of csv,json,svg")

    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config")

    p_b = sub.add_parser(
        "bounds",
        help="evaluate one closed-form bound",
        description="ops: " + ", ".join(BOUND_ARGS) + ". Pass inputs as --name value "
        "(e.g. --tau-D 1 --L 1); --units natural|SI and --t-planck select constants.",
    )
    p_b.add_argument("op", choices=list(BOUND_ARGS))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra and args.command != "bounds":
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        if args.command == "validate":
            cfg = parse_config(_read(args.config))
            print(json.dumps({"valid": True, "kind": cfg.kind}))
            return EXIT_OK
        if args.command == "run":
            from .runner import run

            cfg = parse_config(_read(args.config))
            manifest = run(cfg, args.out, _formats(args.format))
            for o in manifest.outputs:
                print(o["path"])
            return EXIT_OK
        if args.command == "bounds":
            from .config import _validate_bounds, build_constants
            from .runner import evaluate_bound, to_json

            params = _validate_bounds(_bounds_params(args.op, extra))
            try:
                constants = build_constants(params)
            except ChronodecError as exc:
                raise ConfigError("E_VALUE", str(exc)) from exc
            result = evaluate_bound(params, constants)
            sys.stdout.write(to_json({k: result[k] for k in ("inputs", "value", "units")}))
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChronodecError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
