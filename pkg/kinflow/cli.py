import argparse
import logging
import os
import sys

from ._Reference.ndjson_logging import setup_logging
from ._Reference.kinflow_info import EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR
from ._CustomClasses.CheckRecord import CheckRecord
from ._CustomClasses.ExperimentConfig import ExperimentConfig
from ._CustomClasses.CustomExceptions import ConfigError, ShapeMismatch, KinflowError
from ._HelperFunctions.config_helpers import resolve_threads
from ._HelperFunctions.output_helpers import write_summary
from . import runBoltzmannSolve, runDerivativeCheck, runKnudsenStationary, runFvFlow, runQuasiInvariance, runIbp

########################################################################################################################
#           kinflow run
#
#           ABOUT:  Entry point of the command line. Reads an experiment config, applies the --out / --seed /
#           --threads overrides, dispatches to the experiment folder and writes summary.json with the pass/fail of
#           every check. Exit code 0 when every check passes, 1 when one fails, 2 on a config error.
########################################################################################################################

EXPERIMENTS = {
    "boltzmann-solve": runBoltzmannSolve.main,
    "boltzmann-derivative-check": runDerivativeCheck.main,
    "knudsen-stationary": runKnudsenStationary.main,
    "fv-flow": runFvFlow.main,
    "fv-quasi-invariance": runQuasiInvariance.main,
    "fv-ibp": runIbp.main,
}

MIN_PYTHON = (3, 9)


class WarningCollector(logging.Handler):
    """keeps the messages of warning records emitted during a run"""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(record.getMessage())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinflow", description="run a kinflow experiment from a JSON config")
    commands = parser.add_subparsers(dest="command", required=True)
    run_parser = commands.add_parser("run", help="run the experiment described by a config file")
    run_parser.add_argument("config", help="path of the JSON experiment config")
    run_parser.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    run_parser.add_argument("--seed", type=int, default=None, help="seed (overrides seed)")
    run_parser.add_argument("--threads", type=int, default=None, help="worker threads for Monte Carlo sampling")
    return parser


def run(argv=None) -> int:
    """
    Runs `kinflow run <config.json> [--out DIR] [--seed N] [--threads N]`

    :param argv: argument list without the program name; defaults to sys.argv[1:]
    :return: the exit code
    """
    log = setup_logging("kinflow", log_to_file=False)

    # check python version
    if sys.version_info[:2] < MIN_PYTHON:
        log.critical(f"Using Python {sys.version_info[0]}.{sys.version_info[1]}, kinflow needs "
                     f"{MIN_PYTHON[0]}.{MIN_PYTHON[1]} or newer")
        return EXIT_CONFIG_ERROR

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code == 0 else EXIT_CONFIG_ERROR

    ############# CONFIG SECTION #############

    try:
        config = ExperimentConfig.from_file(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.output_dir = args.out
        config.threads = resolve_threads(args.threads, config.threads)
    except (ConfigError, ShapeMismatch) as ex:
        log.error(f"invalid config {args.config}: exception=({ex})")
        return EXIT_CONFIG_ERROR

    ############# EXPERIMENT SECTION #############

    collector = WarningCollector()
    log.addHandler(collector)
    out_dir = config.output_dir
    try:
        checks = EXPERIMENTS[config.experiment](config, out_dir)
    except (ConfigError, ShapeMismatch) as ex:
        log.error(f"{config.experiment} rejected its parameters: exception=({ex})")
        return EXIT_CONFIG_ERROR
    except KinflowError as ex:
        log.error(f"{config.experiment} failed: exception=({ex})")
        checks = [CheckRecord.failed(f"{config.experiment}_completed", ex)]
    finally:
        log.removeHandler(collector)

    for check in checks:
        if not check.passed:
            log.error(f"check {check.name} failed: value={check.value!r}, threshold={check.threshold!r} {check.detail}")
    summary = write_summary(out_dir, config.experiment, config.seed, checks, collector.messages)
    log.info(f"{config.experiment} wrote {os.path.join(out_dir, 'summary.json')}: passed={summary['passed']}")
    return EXIT_OK if summary["passed"] else EXIT_CHECK_FAILED


def main() -> None:
    sys.exit(run())
