"""Command line entry point: ``randinv <kind> [options]``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .core import NumericError
from .experiments import COLUMNS, DEFAULTS, KINDS, ConfigError, ExperimentConfig, run

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


def _number(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity", "∞"):
        return math.inf
    return float(s)


def _count(s: str) -> int:
    v = float(s)
    if v != int(v):
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
    return int(v)


def _number_list(s: str) -> list[float]:
    return [_number(v) for v in s.split(",") if v.strip()]


def _count_list(s: str) -> list[int]:
    return [_count(v) for v in s.split(",") if v.strip()]


# flag -> (config attribute, parser, help)
_FLAGS = {
    "reps": ("reps", _count, "replicates per grid point"),
    "r": ("r", _count, "randomization replicates per data set"),
    "p": ("p", _number_list, "comma-separated exponents (inf allowed)"),
    "n": ("n", _count_list, "comma-separated dimensions / sample sizes"),
    "m": ("m", _count_list, "comma-separated second-sample sizes"),
    "lambda": ("lam", _number_list, "comma-separated EMGD rates (inf allowed)"),
    "var1": ("var1", _number, "variance of the first sample"),
    "var2": ("var2", _number, "variance of the second sample"),
    "t-grid": ("t_grid", _number_list, "comma-separated evaluation points"),
    "trials": ("trials", _count, "ratio-of-uniforms proposals per exponent"),
    "samples": ("samples", _count, "Haar rotations per estimate"),
    "be-constant": ("be_constant", _number, "Berry-Esseen constant C"),
}


def _flags_for(kind: str) -> list[str]:
    allowed = DEFAULTS[kind]
    return [flag for flag, (attr, _, _) in _FLAGS.items() if attr in allowed]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randinv", description="Randomization-invariance simulation studies.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"columns: {','.join(COLUMNS[kind])}")
        sp.add_argument("--seed", type=_count, default=None, help="master seed (default 0)")
        sp.add_argument("--out", type=Path, default=None, help="output directory (default .)")
        sp.add_argument("--config", type=Path, default=None, help="flat key = value file; flags override it")
        for flag in _flags_for(kind):
            _, conv, help_ = _FLAGS[flag]
            sp.add_argument(f"--{flag}", type=conv, default=None, help=help_)
        if "analytic_moments" in DEFAULTS[kind]:
            sp.add_argument("--analytic-moments", action="store_true", default=None,
                            help="use exact EMGD moments for the Berry-Esseen band")
    return parser


def read_config_file(path: Path, kind: str) -> dict:
    """Parse ``key = value`` lines; keys are the long flag names without dashes."""
    allowed = set(_flags_for(kind)) | {"seed", "out"}
    if "analytic_moments" in DEFAULTS[kind]:
        allowed.add("analytic-moments")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "kind":
            if value != kind:
                raise ConfigError(f"{path}:{lineno}: config is for kind {value!r}, not {kind!r}")
            continue
        if key not in allowed:
            raise ConfigError(f"{path}:{lineno}: key {key!r} does not apply to {kind!r}")
        try:
            if key == "seed":
                values["seed"] = _count(value)
            elif key == "out":
                values["out_dir"] = Path(value)
            elif key == "analytic-moments":
                values["analytic_moments"] = value.lower() in ("1", "true", "yes", "on")
            else:
                attr, conv, _ = _FLAGS[key]
                values[attr] = conv(value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return values


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = read_config_file(args.config, args.kind) if args.config else {}
    if args.seed is not None:
        values["seed"] = args.seed
    if args.out is not None:
        values["out_dir"] = args.out
    for flag in _flags_for(args.kind):
        attr = _FLAGS[flag][0]
        v = getattr(args, attr if flag != "lambda" else "lambda")
        if v is not None:
            values[attr] = v
    if getattr(args, "analytic_moments", None):
        values["analytic_moments"] = True
    return ExperimentConfig(kind=args.kind, **values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = config_from_args(args)
        paths = run(config)
    except (ConfigError, ValueError) as exc:
        print(f"randinv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"randinv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, ArithmeticError, RuntimeError) as exc:
        print(f"randinv: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
