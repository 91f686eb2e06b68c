import argparse
import logging
import sys

from experiment_runner import ExperimentRunner
from models.errors import AcceptanceError, AdmissibilityError, ConfigError, GflameError, NumericalError
from services.config import render_config

EXIT_CODES = (
    (ConfigError, 2),
    (NumericalError, 3),
    (AdmissibilityError, 3),
    (AcceptanceError, 4),
)


def _exit_code(error: GflameError) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Run a curvature G-equation experiment in a cellular flow."
    )
    parser.add_argument("config", help="Path to a key=value experiment file")
    parser.add_argument(
        "--print-config", action="store_true", help="Echo the validated experiment and exit"
    )
    parser.add_argument(
        "--settings", default="config.yaml", help="Solver defaults file (default: config.yaml)"
    )
    args = parser.parse_args(argv)

    # Configure logging
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    try:
        runner = ExperimentRunner(args.settings)
        run = runner.load_run(args.config)
        if args.print_config:
            sys.stdout.write(render_config(run))
            return 0
        runner.execute(run)
    except GflameError as error:
        print(
            f"error module={error.module} kind={type(error).__name__} message={error}",
            file=sys.stderr,
        )
        return _exit_code(error)
    return 0


if __name__ == "__main__":
    sys.exit(main())
