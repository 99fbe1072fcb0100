"""Command-line entry point: ``coulomb <command> --config <path>``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .exceptions import ConditioningError, ConfigError

log = logging.getLogger("coulomb")

COMMANDS = {
    "verify-sphere": harness.cmd_verify_sphere,
    "verify-torus": harness.cmd_verify_torus,
    "identities": harness.cmd_identities,
    "fit-b2": harness.cmd_fit_b2,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coulomb", description="Coulomb gas free-energy verification runs.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="TOML run configuration (defaults apply if omitted)")
    p.add_argument("--only", action="append", metavar="SUITE",
                   help="identities: run only this suite (repeatable)")
    p.add_argument("--out", type=Path, help="output path; overrides output_path from the config")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = harness.load_config(args.config) if args.config else harness.config_from_mapping({})
        if args.only and args.command != "identities":
            raise ConfigError("--only applies to the identities command")
        if args.command == "identities":
            result = harness.cmd_identities(cfg, args.only)
        else:
            result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG
    except ConditioningError as exc:
        print(f"conditioning error: {exc}", file=sys.stderr)
        return harness.EXIT_CONDITIONING

    for line in result.lines:
        print(line)
    out = args.out or (Path(cfg.output_path) if cfg.output_path else None)
    if out is not None:
        if result.rows:
            harness.write_csv(result.rows, out)
        else:
            out.write_text("\n".join(result.lines) + "\n")
        log.info("wrote %s", out)
    elif result.rows:
        sys.stdout.write(harness.rows_to_csv(result.rows))
    return result.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
