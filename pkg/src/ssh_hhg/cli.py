"""Command-line entry point: run, emit-figure, validate, convergence.

Exit codes: 0 success, 1 configuration or input error, 2 invariant violation
(or a failed oracle check for ``validate``).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .bundle import FIGURE_TAGS, BundleError, emit_figure_data, run
from .config import PRESETS, ConfigError, RunConfig, apply_overrides, dump_config, load_config, preset

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


def _log(msg: str):
    print(msg, file=sys.stderr, flush=True)


def resolve_config(args) -> RunConfig:
    """Preset or file, then ``--set`` overrides, then the output directory."""
    if bool(args.preset) == bool(args.config):
        raise ConfigError("give exactly one of --preset or --config")
    if args.preset:
        config = preset(args.preset)
        if args.set and not args.allow_override:
            raise ConfigError(
                f"preset {args.preset!r} encodes fixed parameters; pass --allow-override to change "
                + ", ".join(s.split("=", 1)[0] for s in args.set)
            )
    else:
        config = load_config(args.config)
    if args.set:
        config = apply_overrides(config, args.set)
    if args.output:
        config = replace(config, output_dir=str(args.output))
    return config


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. drive.f0=0.002 (repeatable)")
    p.add_argument("--allow-override", action="store_true", help="permit --set on a preset")
    p.add_argument("--output", type=Path, help="bundle directory (overrides output_dir)")


def cmd_run(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        print(dump_config(config), end="")
        return EXIT_OK
    outcome = run(config, log=_log)
    print(outcome.directory)
    return EXIT_OK if outcome.status == "ok" else EXIT_INVARIANT


def cmd_emit_figure(args) -> int:
    paths = emit_figure_data(args.tag, args.bundle, args.output)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_validation

    ok = True
    for delta in (-abs(args.delta), abs(args.delta)):
        print(f"two-cell chain, delta={delta}")
        for check in run_validation(delta=delta):
            print("  " + check.line())
            ok &= check.passed
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_convergence(args) -> int:
    from .convergence import convergence_study

    config = resolve_config(args)
    reports = convergence_study(config, refined_krylov=args.krylov, log=_log)
    payload = [r.as_dict() for r in reports]
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "convergence.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for r in reports:
        mark = "ok " if r.converged else "NOT"
        print(f"{mark} {r.phase:12s} {r.variant:10s} eta {r.eta_change:.3e}  "
              f"eta_no_edge {r.eta_no_edge_change:.3e}  peaks {r.peak_change:.3e}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssh-hhg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate and write a result bundle")
    _add_config_args(p)
    p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("emit-figure", help="write plot-ready CSV columns for a figure panel")
    p.add_argument("tag", help=f"one of {', '.join(FIGURE_TAGS)}")
    p.add_argument("--bundle", action="append", required=True, type=Path, help="run bundle (repeatable)")
    p.add_argument("--output", type=Path, default=Path("figures"))
    p.set_defaults(func=cmd_emit_figure)

    p = sub.add_parser("validate", help="oracle suite on a two-cell chain")
    p.add_argument("--delta", type=float, default=0.15)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("convergence", help="half-step and larger-Krylov comparison")
    _add_config_args(p)
    p.add_argument("--krylov", type=int, default=8, help="refined Krylov dimension")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BundleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
