# -*- coding: utf-8 -*-
import argparse
import logging
import sys
from typing import List, Optional

from qretrieve import codec
from qretrieve.__about__ import __version__
from qretrieve.exceptions import ConfigError, QRetrieveError
from qretrieve.experiment import (
    BUNDLED_CONFIG,
    ExperimentConfig,
    check_state,
    load_config,
    run_generalization,
    run_noise_sweep,
    run_retrieval,
)

logger = logging.getLogger('qretrieve')


def cmd_check_state(args, out) -> int:
    """Validate the configured probe state and print the report."""
    config = _config(args)
    report = check_state(config)
    _print(codec.dumps(report.to_dict()), out)
    if not report.valid:
        logger.warning('state is invalid: %s', report.failure_reason)
        return 1
    return 0


def cmd_retrieve(args, out) -> int:
    """Run retrieval restarts and write per-run and cluster summaries."""
    config = _config(args)
    report = run_retrieval(config, jobs=args.jobs)
    directory = _output_dir(args, config)
    codec.dump(config.to_dict(), codec.output_path(directory, 'config.json'))
    traces = {}
    for name, alg in report.algorithms.items():
        path = codec.output_path(directory, f'retrieve_{name}.csv')
        codec.write_runs(alg.rows, path)
        traces[name] = alg.mean_fourier_trace
    summary = report.summary()
    codec.dump(summary, codec.output_path(directory, 'clusters.json'))
    codec.write_traces(traces, codec.output_path(directory, 'traces.csv'))
    for name, alg in report.algorithms.items():
        _print(
            f'{name}: {len(alg.results)} runs, success fraction '
            f'{alg.success_fraction:.3f}, {len(alg.clusters)} clusters',
            out,
        )
    return 0


def cmd_sweep_noise(args, out) -> int:
    """Run the shot-noise sweep and write the sensitivity table."""
    config = _config(args)
    sweep = run_noise_sweep(config, jobs=args.jobs)
    directory = _output_dir(args, config)
    codec.write_sensitivity(
        sweep, codec.output_path(directory, 'sensitivity.csv')
    )
    summary = sweep.summary()
    codec.dump(summary, codec.output_path(directory, 'sensitivity.json'))
    _print(codec.dumps(summary), out)
    return 0


def cmd_generalize(args, out) -> int:
    """Compare both algorithms on an m-mode generalized state."""
    report = run_generalization(
        args.modes, args.runs, seed=args.seed or 0, jobs=args.jobs
    )
    summary = report.summary()
    directory = args.out or '.'
    codec.dump(
        summary, codec.output_path(directory, f'generalize_m{args.modes}.json')
    )
    _print(codec.dumps(summary), out)
    return 0


def _config(args) -> ExperimentConfig:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out is not None:
        overrides['output_dir'] = args.out
    if overrides:
        config = config.replace(**overrides)
    return config


def _output_dir(args, config: ExperimentConfig) -> str:
    if args.out is not None:
        return args.out
    if config.output_dir is not None:
        return config.output_dir
    return '.'


def _print(text: str, out) -> None:
    if out is not None:
        print(text, file=out)


def _seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f'invalid seed: {value!r}') from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(
            f'seed must be an unsigned 64-bit integer: {value}'
        )
    return seed


def _add_common(parser: argparse.ArgumentParser, config: bool = True):
    if config:
        parser.add_argument(
            '--config',
            metavar='PATH',
            default=str(BUNDLED_CONFIG),
            help='experiment configuration (default: bundled psi6.json)',
        )
    parser.add_argument(
        '--seed',
        metavar='U64',
        type=_seed,
        help='override the master seed',
    )
    parser.add_argument(
        '--jobs',
        metavar='N',
        type=int,
        default=-1,
        help='number of worker processes (default: all cores)',
    )
    parser.add_argument(
        '--out',
        metavar='DIR',
        help='directory for output files',
    )


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='qretrieve',
        description='Phase retrieval with quantum and classical light.',
    )
    parser.add_argument(
        '-V',
        '--version',
        action='version',
        version='QRetrieve v{}'.format(__version__),
    )
    parser.add_argument(
        '-v',
        '--verbose',
        action='count',
        dest='verbosity',
        default=0,
        help='increase verbosity',
    )
    parser.add_argument(
        '-q',
        '--quiet',
        action='store_true',
        help='suppress output on <stdout>',
    )
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    check = sub.add_parser(
        'check-state', help='check a probe state for uniqueness'
    )
    _add_common(check)
    check.set_defaults(func=cmd_check_state)

    retrieve = sub.add_parser(
        'retrieve', help='run phase-retrieval restarts'
    )
    _add_common(retrieve)
    retrieve.set_defaults(func=cmd_retrieve)

    sweep = sub.add_parser(
        'sweep-noise', help='compare phase errors under shot noise'
    )
    _add_common(sweep)
    sweep.set_defaults(func=cmd_sweep_noise)

    generalize = sub.add_parser(
        'generalize', help='run both algorithms on an m-mode state'
    )
    generalize.add_argument(
        '-m',
        '--modes',
        metavar='M',
        type=int,
        required=True,
        help='number of modes (at least 6)',
    )
    generalize.add_argument(
        '--runs',
        metavar='N',
        type=int,
        default=200,
        help='restarts per algorithm (default: 200)',
    )
    _add_common(generalize, config=False)
    generalize.set_defaults(func=cmd_generalize)
    return parser


def main(argv: Optional[List[str]] = None):
    parser = _parser()
    args = parser.parse_args(argv)

    if args.quiet:
        args.verbosity = 0
        out = None
    else:
        args.verbosity = min(args.verbosity, 3)
        out = sys.stdout

    logging.basicConfig()
    logger.setLevel(logging.ERROR - (args.verbosity * 10))

    try:
        exitcode = args.func(args, out)
    except ConfigError as exc:
        print(f'error: {exc}', file=sys.stderr)
        exitcode = 2
    except QRetrieveError as exc:
        print(f'error: {exc}', file=sys.stderr)
        exitcode = 1

    sys.exit(exitcode)


if __name__ == '__main__':
    main()
