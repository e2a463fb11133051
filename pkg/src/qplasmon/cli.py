"""Command line entry point: ``qplasmon <subcommand> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from qplasmon.errors import ConfigError, ParseError, QPlasmonError
from qplasmon.harness.config import ScenarioConfig, load_config
from qplasmon.harness.report import emit_csv
from qplasmon.harness.scenarios import RUNNERS

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_NOT_CONVERGED = 4

log = logging.getLogger("qplasmon")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qplasmon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name.replace("_", "-"))
        p.add_argument("--config", type=Path, help="key = value scenario file (defaults if omitted)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
        p.add_argument("--zero-noise", action="store_true", help="analytic mode, no sampling")
        p.add_argument("--threads", type=int, help="worker threads for grid points")
        if name in ("calibrate", "analyze"):
            p.add_argument("--input", type=Path, help="input CSV (overrides input_csv)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _resolve_config(args, experiment) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config, defaults={"experiment": experiment})
    else:
        cfg = ScenarioConfig(experiment=experiment)
    if cfg.experiment != experiment:
        raise ConfigError(f"experiment: config says {cfg.experiment!r}, subcommand is {experiment!r}")
    changes = {"output_dir": str(args.out)}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.zero_noise:
        changes["zero_noise"] = True
    if args.threads is not None:
        changes["threads"] = args.threads
    if getattr(args, "input", None) is not None:
        changes["input_csv"] = str(args.input)
    return cfg.replace(**changes)


def _print_summary(report):
    s = report.summary
    if report.experiment == "angle_scan":
        print(f"rows: {s['rows']}  below SNL: {s['below_snl_rows']} "
              f"({100 * s['below_snl_fraction']:.1f}%)")
    elif report.experiment == "concentration_scan":
        print(f"dn/dC = {s['slope']:.6e} +/- {s['slope_uncertainty']:.3e}  "
              f"(intercept {s['intercept']:.7f})")
    elif report.experiment == "calibrate":
        print(f"eps_gold = {s['gold_eps_real']:.4f} + {s['gold_eps_imag']:.4f}i  "
              f"d = {s['gold_thickness']:.3f} nm  rms = {s['residual_rms']:.3e}  "
              f"converged = {s['converged']}")
        for label, n in s["analyte_indices"].items():
            print(f"  n[{label}] = {n:.6f}")
    else:
        print(f"settings: {s['settings']}  below SNL: {s['below_snl_rows']}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    experiment = args.command.replace("-", "_")
    try:
        cfg = _resolve_config(args, experiment)
        report = RUNNERS[experiment](cfg)
        path = emit_csv(report, Path(cfg.output_dir) / f"{experiment}.csv")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except QPlasmonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _print_summary(report)
    print(f"wrote {path}")
    if experiment == "calibrate" and not report.summary["converged"]:
        print("calibration did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
