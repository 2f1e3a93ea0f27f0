"""
Command-line interface for trigzeros (``rtpz``).

Every experiment subcommand builds an experiment from ``--config`` (a single
experiment mapping, or a suite whose first matching experiment is used) and
then applies the command-line flags on top.
"""

import argparse
import json
import logging
import math
import os
import sys

import yaml

from .errors import ConfigError, TrigZerosError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNCERTIFIED = 2

_EXPERIMENT_COMMANDS = {
    'universality': 'universality',
    'threshold': 'threshold',
    'small-ball': 'small-ball',
    'cramer-probe': 'cramer',
    'edgeworth': 'edgeworth',
}


def _law_argument(text):
    """A builtin law name or an inline JSON law description."""
    text = text.strip()
    if text.startswith('{'):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise argparse.ArgumentTypeError(f"invalid JSON law description: {e}") from e
    return text


def _add_common(parser):
    parser.add_argument('--config', default=None, help='JSON or YAML experiment/suite file')
    parser.add_argument('--law', type=_law_argument, default=None,
                        help='builtin law name (sqrt_primes, rademacher, ...) or JSON description')
    parser.add_argument('--seed', type=int, default=None, help='64-bit master seed')
    parser.add_argument('--workers', type=int, default=None, help='worker processes')
    parser.add_argument('--out-dir', default='results', help='directory for CSV and JSON reports')
    parser.add_argument('--log-dir', default=None, help='write a timing event log here')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG')


def parse_arguments(argv=None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog='rtpz',
        description='Zeros of random trigonometric polynomials: Monte Carlo experiments and oracles',
    )
    commands = parser.add_subparsers(dest='command', required=True)

    universality = commands.add_parser('universality', help='mean zero count against the Gaussian reference')
    _add_common(universality)
    universality.add_argument('--n-list', '--n', type=int, nargs='+', dest='n_list', help='degrees')
    universality.add_argument('--interval', type=float, nargs=2, metavar=('LO', 'HI'))
    universality.add_argument('--trials', type=int)
    universality.add_argument('--r', type=float, help='band exponent, delta = n^-r')
    universality.add_argument('--phase', choices=('zero', 'uniform'))

    threshold = commands.add_parser('threshold', help='frequency of inf(|U_n| + |U_n\'|) < n^theta')
    _add_common(threshold)
    threshold.add_argument('--n-list', '--n', type=int, nargs='+', dest='n_list')
    threshold.add_argument('--interval', type=float, nargs=2, metavar=('LO', 'HI'))
    threshold.add_argument('--trials', type=int)
    threshold.add_argument('--theta', type=float)

    count = commands.add_parser('count-zeros', help='count the zeros of one polynomial')
    _add_common(count)
    count.add_argument('--poly', '--poly-file', dest='poly', default=None,
                       help='polynomial JSON file (otherwise sampled from --law)')
    count.add_argument('--n', type=int, default=None, help='degree when sampling')
    count.add_argument('--interval', type=float, nargs=2, metavar=('LO', 'HI'), default=(0.0, 2.0 * math.pi))
    count.add_argument('--mode', choices=('raw', 'normalized', 'rescaled'), default='normalized')
    count.add_argument('--method', choices=('kac-rice', 'sign-change', 'both'), default='kac-rice',
                       help='counter whose ZeroCount is printed; both prints the two side by side')
    count.add_argument('--delta', type=float, default=None)

    probe = commands.add_parser('cramer-probe', help='weak Cramer probe of a coefficient law')
    _add_common(probe)
    probe.add_argument('--b', type=float)
    probe.add_argument('--C', type=float)
    probe.add_argument('--R', type=float)
    probe.add_argument('--tmax', '--T-max', type=float, dest='T_max', help='upper end of the scan, default 1e4')
    probe.add_argument('--windows', '--window', type=float, dest='window', help='envelope window width')

    ball = commands.add_parser('small-ball', help='P(|(U_n(t), U_n\'(t))| <= n^-gamma)')
    _add_common(ball)
    ball.add_argument('--n-list', '--n', type=int, nargs='+', dest='n_list')
    ball.add_argument('--trials', type=int)
    ball.add_argument('--gamma', type=float)
    ball.add_argument('--t', type=float)

    expansion = commands.add_parser('edgeworth', help='Edgeworth checks against exact oracles')
    _add_common(expansion)
    expansion.add_argument('--n', type=int)
    expansion.add_argument('--s', type=int)
    expansion.add_argument('--r', type=float)
    expansion.add_argument('--mode', choices=('cdf-check', 'kac-functional'))

    exact = commands.add_parser('gaussian-exact', help='closed-form Gaussian reference values as JSON '
                                '(one object, or a list when several degrees are given)')
    exact.add_argument('--n', type=int, nargs='+', dest='n_list', required=True)
    exact.add_argument('--interval', type=float, nargs=2, metavar=('LO', 'HI'), default=(0.0, 2.0 * math.pi))
    exact.add_argument('--r', type=float, default=1.3)
    exact.add_argument('--out-dir', default=None)
    exact.add_argument('-v', '--verbose', action='count', default=0)

    suite = commands.add_parser('suite', help='run every experiment of a suite file')
    suite.add_argument('--config', required=True)
    suite.add_argument('--seed', type=int, default=None)
    suite.add_argument('--workers', type=int, default=None)
    suite.add_argument('--out-dir', default='results')
    suite.add_argument('--log-dir', default=None)
    suite.add_argument('-v', '--verbose', action='count', default=0)

    template = commands.add_parser('template', help='write a commented suite template')
    template.add_argument('path', nargs='?', default='config_template.yaml')
    template.add_argument('-v', '--verbose', action='count', default=0)

    return parser.parse_args(argv)


def _configure_logging(verbosity):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')


def _read_experiment(path, kind):
    try:
        with open(path, 'r') as f:
            spec = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Error reading config file {path}: {e}") from e
    if 'experiments' not in spec:
        return spec
    defaults = {key: spec[key] for key in ('seed', 'workers') if key in spec}
    for experiment in spec['experiments'] or []:
        if experiment.get('kind') == kind:
            return {**defaults, **experiment}
    raise ConfigError(f"{path} has no {kind} experiment")


def _experiment_spec(args, kind):
    """Merge the config file (if any) with every flag that was given."""
    spec = _read_experiment(args.config, kind) if args.config else {}
    spec['kind'] = kind
    flags = {key: value for key, value in vars(args).items()
             if value is not None and key not in ('command', 'config', 'out_dir', 'log_dir', 'verbose')}
    if 'interval' in flags:
        flags['interval'] = list(flags['interval'])
    spec.update(flags)
    spec.setdefault('name', args.command)
    if 'law' not in spec:
        raise ConfigError("no coefficient law given: use --law or --config")
    return spec


def _print_report(report):
    print(','.join(report.header))
    for row in report.rows[:40]:
        print(','.join(f'{v:.6g}' if isinstance(v, float) else str(v) for v in row))
    if len(report.rows) > 40:
        print(f'... {len(report.rows) - 40} more rows')
    for key, value in report.summary.items():
        if key != 'estimates':
            print(f'{key}: {json.dumps(value, sort_keys=True)}')
    for flag in report.flags:
        print(f'flag: {flag}')


def _run_experiment_command(args):
    from .harness import ExperimentConfig, run_experiment, write_report
    from .utils import initialize_log

    config = ExperimentConfig.from_dict(_experiment_spec(args, _EXPERIMENT_COMMANDS[args.command]))
    log_file = initialize_log(args.log_dir) if args.log_dir else None
    try:
        report = run_experiment(config, log_file)
    finally:
        if log_file is not None:
            log_file.close()
    csv_path, json_path = write_report(report, args.out_dir)
    _print_report(report)
    print(f'Wrote {csv_path} and {json_path}')
    return EXIT_UNCERTIFIED if report.uncertified_excess else EXIT_OK


def _run_count_zeros(args):
    from .distributions import is_standardized, law_from_dict, standardize
    from .harness import DEFAULT_SEED
    from .trigpoly import load_polynomial, sample_polynomial
    from .utils import make_stream
    from .zeros import count_sign_changes, estimate_threshold, kac_rice_count

    if args.poly:
        poly = load_polynomial(args.poly)
    else:
        if args.law is None or args.n is None:
            raise ConfigError("count-zeros needs --poly, or --law together with --n")
        law = law_from_dict(args.law)
        if not is_standardized(law):
            law = standardize(law)
        seed = DEFAULT_SEED if args.seed is None else args.seed
        poly = sample_polynomial(law, args.n, rng_state=make_stream(seed, args.n, 0))

    counts = {}
    if args.method in ('kac-rice', 'both'):
        threshold = estimate_threshold(poly, args.interval, args.mode)
        logger.info("threshold: %s", threshold.to_dict())
        counts['kac_rice'] = kac_rice_count(poly, args.interval, args.mode, args.delta, threshold)
    if args.method in ('sign-change', 'both'):
        counts['sign_change'] = count_sign_changes(poly, args.interval, args.mode)
    if args.method == 'both':
        result = {key: value.to_dict() for key, value in counts.items()}
    else:
        result = next(iter(counts.values())).to_dict()
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, 'count-zeros.json'), 'w', encoding='utf-8', newline='\n') as f:
            f.write(text + '\n')
    return EXIT_OK if all(count.certified for count in counts.values()) else EXIT_UNCERTIFIED


def _run_gaussian_exact(args):
    from .gaussian_reference import KAC_LIMIT, SpectralMoments, exact_expected_zeros, gaussian_kac_functional
    from .utils import write_csv

    header = ('n', 'expected_zeros', 'sigma_n', 'kac_functional', 'expected_over_n', 'kac_limit')
    rows = []
    for n in args.n_list:
        expected = exact_expected_zeros(n, tuple(args.interval))
        rows.append((n, expected, math.sqrt(SpectralMoments.of(n).sigma2),
                     gaussian_kac_functional(n, args.r), expected / n, KAC_LIMIT))
    records = [dict(zip(header, row)) for row in rows]
    print(json.dumps(records[0] if len(records) == 1 else records, indent=2))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        write_csv(os.path.join(args.out_dir, 'gaussian-exact.csv'), header, rows)
    return EXIT_OK


def _run_suite(args):
    from .harness import run_suite

    reports = run_suite(args.config, args.out_dir, args.workers, args.log_dir, args.seed)
    for report in reports:
        print(f"{report.name} ({report.kind}): {len(report.rows)} rows"
              + (f", flags: {', '.join(report.flags)}" if report.flags else ''))
    print(f"Reports written to {args.out_dir}")
    return EXIT_UNCERTIFIED if any(report.uncertified_excess for report in reports) else EXIT_OK


def _run_template(args):
    from .utils import generate_config_template

    generate_config_template(args.path)
    print(f"Template written to {args.path}")
    return EXIT_OK


def main(argv=None):
    """Main entry point for the rtpz CLI; returns the exit status."""
    args = parse_arguments(argv)
    _configure_logging(args.verbose)

    handlers = {
        'count-zeros': _run_count_zeros,
        'gaussian-exact': _run_gaussian_exact,
        'suite': _run_suite,
        'template': _run_template,
    }
    handler = handlers.get(args.command, _run_experiment_command)
    logger.debug("rtpz %s with %s", args.command, vars(args))
    try:
        status = handler(args)
    except TrigZerosError as e:
        print(f"Error: {e}", file=sys.stderr)
        status = EXIT_ERROR
    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        status = EXIT_ERROR
    except Exception as e:
        print(f"Error during execution: {e}", file=sys.stderr)
        import traceback
        traceback.print_exc()
        status = EXIT_ERROR
    return status