"""
Fock Space Localization Lab
Command-line front end: pairings, Berezin transforms, localization reports
and the experiment catalog
"""

import argparse
import logging
import sys
from pathlib import Path

import experiments
from config import OUTPUT_DIR, QuadratureConfig, Sampling, effective_threads
from exceptions import ConfigError, LabError, SpecDecodeError, UnknownExperiment
from fock_core import CPoint
from history import RunHistory
from localization import build_report
from operators import berezin, from_json, pairing
from reporting import ReportGenerator

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

DEFAULT_SEED = Sampling.SEED

logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(prog="lab", description="Numerical lab for localized operators on Fock space")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for sampled points")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: LAB_THREADS or all cores)")
    common.add_argument("--out", type=Path, default=OUTPUT_DIR, help="output directory for CSV/JSON files")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    common.add_argument("--hermite-order", type=int, default=None)
    common.add_argument("--legendre-order", type=int, default=None)
    common.add_argument("--ladder", type=str, default=None, help="comma-separated truncation radii")
    common.add_argument("--rel-tol", type=float, default=None)

    sub = parser.add_subparsers(dest="command", required=True)

    pairing = sub.add_parser("pairing", parents=[common], help="one value <T k_z, k_w>")
    pairing.add_argument("--op", required=True, help="operator JSON, inline or a file path")
    pairing.add_argument("--z", required=True, help="point as 're,im;re,im'")
    pairing.add_argument("--w", required=True, help="point as 're,im;re,im'")

    berezin = sub.add_parser("berezin", parents=[common], help="Berezin transform at z")
    berezin.add_argument("--op", required=True)
    berezin.add_argument("--z", required=True)

    report = sub.add_parser("report", parents=[common], help="full localization report")
    report.add_argument("--op", required=True)
    report.add_argument("--p", type=str, default=None, help="comma-separated p grid")

    experiment = sub.add_parser("experiment", parents=[common], help="run catalog experiments")
    experiment.add_argument("name", nargs="?", default=None)
    experiment.add_argument("--all", action="store_true", help="run the whole catalog")

    sub.add_parser("list", parents=[common], help="experiment catalog and last verdicts")
    return parser


def _float_list(text, flag):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}")


def load_operator(text):
    """Operator spec from inline JSON or a JSON file"""
    text = text.strip()
    if not text.startswith("{"):
        path = Path(text)
        if not path.exists():
            raise SpecDecodeError(f"--op is neither inline JSON nor an existing file: {text}")
        text = path.read_text(encoding="utf-8")
    return from_json(text)


def run_config(args):
    """QuadratureConfig with the command-line overrides applied"""
    ladder = _float_list(args.ladder, "--ladder") if args.ladder else None
    threads = effective_threads(args.threads)
    return QuadratureConfig().with_overrides(
        hermite_order=args.hermite_order,
        legendre_order=args.legendre_order,
        radius_ladder=ladder,
        rel_tol=args.rel_tol,
        threads=threads,
    )


def cmd_pairing(args, cfg):
    op = load_operator(args.op)
    z, w = CPoint.parse(args.z), CPoint.parse(args.w)
    value = pairing(op, z, w, cfg)
    ReportGenerator.print_pairing(op.label(), z, w, value.to_dict())
    return EXIT_OK


def cmd_berezin(args, cfg):
    op = load_operator(args.op)
    z = CPoint.parse(args.z)
    value = berezin(op, z, cfg).item()
    ReportGenerator.print_berezin(op.label(), z, value)
    return EXIT_OK


def cmd_report(args, cfg):
    op = load_operator(args.op)
    p_grid = _float_list(args.p, "--p") if args.p else None

    ReportGenerator.print_step(1, "running diagnostics")
    report = build_report(op, cfg, p_grid=p_grid, threads=cfg.threads)
    ReportGenerator.print_report_summary(report)

    ReportGenerator.print_step(2, "saving report")
    ReportGenerator.save_report_files(report, args.out)
    ReportGenerator.print_footer(report.chain_consistent)
    return EXIT_OK


def cmd_experiment(args, cfg):
    if args.all == (args.name is not None):
        raise ConfigError("give exactly one of an experiment name or --all")
    names = experiments.available() if args.all else [experiments.resolve(args.name)]

    history = RunHistory()
    results = []
    for index, name in enumerate(names, start=1):
        ReportGenerator.print_step(index, name)
        result = experiments.run(name, cfg, cfg.threads)
        ReportGenerator.print_experiment_result(result)
        ReportGenerator.save_experiment(result, args.out)
        history.record_run(name, result.passed, result.runtime)
        results.append(result)

    if len(results) > 1:
        ReportGenerator.save_summary_text(results, Path(args.out) / "summary.txt")
    success = all(r.passed is not False for r in results)
    ReportGenerator.print_footer(success)
    return EXIT_OK if success else EXIT_FAILED


def cmd_list(args, cfg):
    ReportGenerator.print_catalog(RunHistory().last_verdicts())
    return EXIT_OK


COMMANDS = {
    "pairing": cmd_pairing,
    "berezin": cmd_berezin,
    "report": cmd_report,
    "experiment": cmd_experiment,
    "list": cmd_list,
}


def main(argv=None):
    """Parse arguments, dispatch, return the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        Sampling.SEED = args.seed
        cfg = run_config(args)
        if args.command in ("report", "experiment"):
            ReportGenerator.print_header(args.command)
        return COMMANDS[args.command](args, cfg)

    except (SpecDecodeError, UnknownExperiment, ConfigError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except LabError as e:
        print(f"\n❌ Lab error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except KeyboardInterrupt:
        print("\n\n⚠️  Run interrupted by user")
        return EXIT_OK
    except Exception as e:
        print(f"\n❌ Error occurred: {e}", file=sys.stderr)
        import traceback
        traceback.print_exc()
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
