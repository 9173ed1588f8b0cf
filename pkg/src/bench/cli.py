"""
Command-line entry: run, report, mult-info, validate-config, make-dataset
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .datasets import save_micro_dataset
from .report import report
from .runconfig import RunConfig, load_run_config
from .runner import run
from ..multsim.library import default_library
from ..multsim.models import error_metrics
from ..utils.config import config
from ..utils.errors import ApproxNasError, ConfigurationError, FormatError, ParameterError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# Flag name -> RunConfig field
RUN_OVERRIDES = {
    "scenario": "scenario", "dataset": "dataset", "seed": "seed", "generations": "generations",
    "pop_size": "pop_size", "epochs_train": "epochs_train", "epochs_retrain": "epochs_retrain",
    "batch_size": "batch_size", "workers": "workers", "output": "output_dir",
    "multiplier": "fixed_multiplier", "lut_dir": "lut_dir", "train_size": "train_size",
    "retrain_size": "retrain_size", "test_size": "test_size", "train_subset": "train_subset",
    "retrain_top_k": "retrain_top_k", "rows": "rows", "columns": "columns",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="approx-nas",
                                     description="Co-design CNNs and approximate multipliers by CGP search")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run a search and write its artifacts")
    run_cmd.add_argument("--config", help="TOML run configuration")
    run_cmd.add_argument("--scenario", choices=["s1", "s2", "s3", "s4"])
    run_cmd.add_argument("--dataset", help="micro, idx:<dir> or cifar10:<dir>")
    run_cmd.add_argument("--multiplier", help="multiplier id used by scenario s3")
    run_cmd.add_argument("--lut-dir", help="directory of <id>.lut tables")
    run_cmd.add_argument("--output", help="output directory")
    for flag in ("seed", "generations", "pop-size", "epochs-train", "epochs-retrain", "batch-size",
                 "workers", "train-size", "retrain-size", "test-size", "train-subset",
                 "retrain-top-k", "rows", "columns"):
        run_cmd.add_argument(f"--{flag}", type=int)

    report_cmd = commands.add_parser("report", help="summarize a run's final set or combine several runs")
    report_cmd.add_argument("archives", nargs="+", help="archive.json files or run directories")

    info_cmd = commands.add_parser("mult-info", help="show a multiplier's metadata")
    info_cmd.add_argument("id")
    info_cmd.add_argument("--lut-dir")

    validate_cmd = commands.add_parser("validate-config", help="check a TOML run configuration")
    validate_cmd.add_argument("path")

    data_cmd = commands.add_parser("make-dataset", help="write the micro dataset as IDX files")
    data_cmd.add_argument("--output", default=str(Path(config.DATA_DIR) / "micro"))
    data_cmd.add_argument("--seed", type=int, default=config.MICRO_SEED)
    data_cmd.add_argument("--train-count", type=int, default=config.MICRO_TRAIN_COUNT)
    data_cmd.add_argument("--test-count", type=int, default=config.MICRO_TEST_COUNT)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    return cfg.override(**{field: getattr(args, flag) for flag, field in RUN_OVERRIDES.items()})


def _cmd_run(args) -> int:
    result = run(_run_config(args))
    front = result.archive.final
    print(f"{len(result.archive)} candidates evaluated, {len(front)} non-dominated; "
          f"artifacts in {result.output_dir}")
    return EXIT_OK


def _cmd_report(args) -> int:
    print(report(*args.archives), end="")
    return EXIT_OK


def _cmd_mult_info(args) -> int:
    library = default_library(args.lut_dir)
    model = library.by_id(args.id)
    mae, wce = error_metrics(model)
    print(f"id: {model.id}")
    print(f"energy_per_op_pj: {model.energy_per_op}")
    print(f"exact: {model.is_exact}")
    print(f"mae: {mae:.4f}")
    print(f"wce: {wce}")
    return EXIT_OK


def _cmd_validate_config(args) -> int:
    problems = load_run_config(args.path).validate()
    for problem in problems:
        print(problem)
    if problems:
        return EXIT_USAGE
    print("configuration OK")
    return EXIT_OK


def _cmd_make_dataset(args) -> int:
    directory = save_micro_dataset(args.output, seed=args.seed, train_count=args.train_count,
                                   test_count=args.test_count)
    print(f"micro dataset written to {directory}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "report": _cmd_report,
    "mult-info": _cmd_mult_info,
    "validate-config": _cmd_validate_config,
    "make-dataset": _cmd_make_dataset,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, FormatError, ParameterError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ApproxNasError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
