"""Command-line entry point.

    noisycopies run --preset fig2a [--out DIR] [--seeds 0,1,2]
    noisycopies run --config FILE [--out DIR]
    noisycopies verify --level quick|full [--out DIR]
"""

import argparse
import os
import sys

from . import experiments, oracle
from .errors import ConfigError, DivergenceError, IngestionError, ParameterError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_CERTIFICATE = 4


def _seeds(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}")


def build_parser():
    ap = argparse.ArgumentParser(prog="noisycopies", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a figure preset or a JSON config")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help=f"one of: {', '.join(sorted(experiments.PRESETS))}")
    src.add_argument("--config", help="JSON config or a previous run's manifest.json")
    run.add_argument("--out", help=f"output directory (default ${experiments.OUT_ENV}/<name>)")
    run.add_argument("--seeds", type=_seeds, help="comma-separated seeds")
    run.add_argument("--epochs", type=int, help="override the preset epoch count")
    ver = sub.add_parser("verify", help="Monte-Carlo certificates for the expected updates")
    ver.add_argument("--level", choices=sorted(experiments.VERIFY_DRAWS), default="quick")
    ver.add_argument("--out", help="write report.txt and certificates.csv here")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if args.preset:
                overrides = {"epochs": args.epochs} if args.epochs is not None else None
                res = experiments.run_preset(args.preset, args.out, args.seeds, overrides)
                print(f"wrote {len(res.paths)} files to {res.out_dir}")
            else:
                cfg = experiments.load_config(args.config)
                if args.seeds:
                    cfg["seeds"] = args.seeds
                out = experiments.run_custom(cfg, args.out)
                n = len(out.paths) if hasattr(out, "paths") else len(out)
                print(f"wrote {n} curve files")
            return EXIT_OK
        certs = experiments.run_verify(args.level)
        sys.stdout.write(oracle.report_lines(certs))
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            with open(os.path.join(args.out, "report.txt"), "w") as fh:
                fh.write(oracle.report_lines(certs))
            with open(os.path.join(args.out, "certificates.csv"), "w") as fh:
                fh.write(oracle.report_csv(certs))
        return EXIT_OK if all(c.passed for c in certs) else EXIT_CERTIFICATE
    except (ConfigError, IngestionError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
