"""
moilab.cli
~~~~~~~~~~

``moilab run <config.json> [--threads K] [--out DIR]``, ``moilab list
[--json]`` and ``moilab validate <config.json>``.  A bundled experiment
can be run by name in place of a config path.

Exit codes: 0 when every declared tolerance passes, 2 when one fails, 1 on
input errors.

"""
import argparse
import json
import logging
import platform
import sys
from pathlib import Path
from typing import Any, Final, Optional, Sequence

import joblib
import numpy as np
import pydantic
import scipy

from . import __version__
from .config import EXPERIMENTS, Base, LabSettings, bundled_config, load_config
from .exceptions import ConfigInvalid, MoiLabException
from .experiments import Outcome, list_experiments, run_experiment
from .report import config_digest, write_csv, write_json

log: Final = logging.getLogger(__name__)

EXIT_OK: Final = 0
EXIT_INPUT: Final = 1
EXIT_TOLERANCE: Final = 2


def versions() -> dict[str, str]:
    return {'moilab': __version__, 'python': platform.python_version(), 'numpy': np.__version__,
            'scipy': scipy.__version__, 'joblib': joblib.__version__, 'pydantic': pydantic.VERSION}


def resolve_config(name: str) -> Path:
    '''A config path, or the bundled config when ``name`` is an experiment.'''
    path = Path(name)
    if not path.exists() and name in EXPERIMENTS:
        return bundled_config(name)
    return path


def read_config(name: str) -> Base:
    try:
        return load_config(resolve_config(name))
    except ValueError as e:
        raise ConfigInvalid('%s: %s' % (name, e), raw=name) from e


def write_outputs(config: Base, outcome: Outcome, out_dir: Path, threads: int) -> tuple[Path, Path]:
    name = outcome.experiment
    csv_path = write_csv(out_dir / (config.output.csv or '%s.csv' % name), outcome.header, outcome.rows)
    tables = {}
    for table, (header, rows) in outcome.tables.items():
        tables[table] = write_csv(out_dir / ('%s-%s.csv' % (name, table)), header, rows).name
    dumped = config.model_dump(mode='json', by_alias=True)
    payload = {
        'experiment': name,
        'passed': outcome.passed,
        'seed': config.seed,
        'threads': threads,
        'config_digest': config_digest(dumped),
        'config': dumped,
        'versions': versions(),
        'checks': [c.to_dict() for c in outcome.checks],
        'summary': outcome.summary,
        'results_csv': csv_path.name,
        'tables': tables,
    }
    json_path = write_json(out_dir / (config.output.json_file or '%s.json' % name), payload)
    return csv_path, json_path


def cmd_run(args: argparse.Namespace) -> int:
    settings = LabSettings.get_current()
    config = read_config(args.config)
    outcome = run_experiment(config, settings.threads)
    csv_path, json_path = write_outputs(config, outcome, settings.out_dir, settings.threads)
    for check in outcome.checks:
        print('%-40s %12.4e %12.4e  %s' % (check.name, check.value, check.tolerance,
                                           'ok' if check.passed else 'FAIL'))
    print('%s: %s (%s, %s)' % (outcome.experiment, 'passed' if outcome.passed else 'FAILED', csv_path, json_path))
    return EXIT_OK if outcome.passed else EXIT_TOLERANCE


def cmd_list(args: argparse.Namespace) -> int:
    names = list_experiments()
    if args.json:
        print(json.dumps(names))
    else:
        print('\n'.join(names))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = read_config(args.config)
    print('%s: valid %s config' % (args.config, config.experiment))  # type: ignore[attr-defined]
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='moilab', description='Numerical lab for multiple operator integrals.')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', required=True)
    run = sub.add_parser('run', help='run one experiment')
    run.add_argument('config', help='config file, or the name of a bundled experiment')
    run.add_argument('--threads', type=int, default=None, help='worker threads (MOILAB_THREADS)')
    run.add_argument('--out', default=None, help='output directory (MOILAB_OUT_DIR)')
    run.set_defaults(handler=cmd_run)
    listing = sub.add_parser('list', help='list experiments')
    listing.add_argument('--json', action='store_true', help='print a JSON array')
    listing.set_defaults(handler=cmd_list)
    validate = sub.add_parser('validate', help='check a config file without running it')
    validate.add_argument('config')
    validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides: dict[str, Any] = {'threads': getattr(args, 'threads', None), 'out_dir': getattr(args, 'out', None)}
    try:
        settings = LabSettings.activate(**overrides)
    except pydantic.ValidationError as e:
        print('moilab: error: invalid settings: %s' % e, file=sys.stderr)
        return EXIT_INPUT
    try:
        logging.basicConfig(level=settings.log_level.upper(), format='%(levelname)s %(name)s: %(message)s')
        return args.handler(args)
    except MoiLabException as e:
        log.debug('input error', exc_info=True)
        print('moilab: error: %s' % e, file=sys.stderr)
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
