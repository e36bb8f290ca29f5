#!/usr/bin/env python3
"""
grasmle - maximum likelihood estimation for the Grassmannian distribution

Main entry point for the application.
"""

import sys
import argparse
import importlib
from pathlib import Path

# Load environment variables first
from dotenv import load_dotenv
load_dotenv()

# Add repository root to Python path
sys.path.insert(0, str(Path(__file__).parent))

from src.utils import logger


COMMANDS = {
    'sample': ('src.cli.estimate', 'sample_subspaces', 'Draw a sample from G_sigma or G_I'),
    'fit': ('src.cli.estimate', 'fit_sample', 'Fit the estimate of a sample'),
    'experiment': ('src.cli.estimate', 'run_simulation', 'Run the consistency simulation study'),
    'check': ('src.cli.diagnose', 'check_sample', 'Decide uniqueness of the estimate for a sample'),
    'bound': ('src.cli.diagnose', 'sample_bound', 'Print the sample-size bound and B(m, r)'),
    'mc-critical': ('src.cli.diagnose', 'critical_frequency', 'Monte Carlo at a critical sample size'),
}

# experiment takes --config for its experiment file
SETTINGS_FLAG = {'experiment': '--settings'}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="grasmle - Grassmannian maximum likelihood estimation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s sample --uniform --m 4 --r 2 --n 5 --seed 7 --out sample.json
  %(prog)s fit --sample sample.json --method newton --report report.json
  %(prog)s check --sample sample.json
  %(prog)s bound --m 4 --r 2 --enumerate
  %(prog)s experiment --config config/experiment.json --out results/experiment
  %(prog)s mc-critical --m 4 --r 2 --n 4 --field real --trials 1000

Run '%(prog)s <command> --help' for the options of a command.
        """
    )

    parser.add_argument(
        '--config',
        default='config/settings.yaml',
        help='Configuration file path (default: config/settings.yaml)'
    )

    parser.add_argument(
        '--verbose', '-v',
        action='store_true',
        help='Enable verbose logging'
    )

    subparsers = parser.add_subparsers(dest='command', help='Available commands')
    for name, (_, _, description) in COMMANDS.items():
        # Options after the command name are passed through to it
        subparsers.add_parser(name, help=description, add_help=False)
    return parser


def forwarded_arguments(args: argparse.Namespace, rest: list) -> list:
    """Command arguments plus the global --config/--verbose unless given explicitly."""
    arguments = list(rest)
    flag = SETTINGS_FLAG.get(args.command, '--config')
    if flag not in arguments:
        arguments.extend([flag, args.config])
    if args.verbose and '--verbose' not in arguments:
        arguments.append('--verbose')
    return arguments


def main():
    """Main entry point for grasmle."""
    parser = build_parser()
    args, rest = parser.parse_known_args()

    if args.command is None:
        parser.print_help()
        sys.exit(2)

    module_name, attribute, _ = COMMANDS[args.command]
    command = getattr(importlib.import_module(module_name), attribute)

    try:
        command.main(args=forwarded_arguments(args, rest), prog_name=f"{parser.prog} {args.command}")
    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user.", file=sys.stderr)
        sys.exit(1)
    except Exception as e:
        logger.error(f"Application error: {str(e)}")
        sys.exit(1)


if __name__ == '__main__':
    main()
