"""
Experiment orchestration for trigzeros.

Each experiment kind maps a validated :class:`ExperimentConfig` to an
:class:`ExperimentReport` holding CSV rows plus provenance.  Monte Carlo
trials draw from ``make_stream(seed, n, trial)`` and are mapped over a
``multiprocessing.Pool`` in trial order, so the numbers do not depend on the
worker count.
"""

import json
import logging
import math
import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import special

from . import cramer, edgeworth, gaussian_reference, smallball, zeros
from .distributions import is_standardized, law_from_dict, standardize
from .errors import ConfigError, FlatEnvelopeError, InsufficientDataError
from .trigpoly import PhasePolicy, SummandFamily, sample_polynomial
from .utils import (EXPERIMENT_KINDS, config_hash, initialize_log, load_config, make_stream,
                    write_csv, write_log)

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240601
UNCERTIFIED_TOLERANCE = 0.01

HEADERS = {
    'universality': ('n', 'trials', 'mean_count', 'se', 'mean_over_n', 'reference_over_n',
                     'limit_over_n', 'certified_fraction', 'agreement_fraction'),
    'threshold': ('n', 'trials', 'theta', 'below_fraction', 'mean_omega_lower', 'certified_fraction'),
    'small-ball': ('n', 'gamma', 'trials', 'hits', 'estimate', 'se'),
    'cramer': ('window_center', 'sup_abs_phi', 'argmax_t'),
    'edgeworth': ('x', 'oracle', 'gaussian', 'edgeworth'),
    'edgeworth-kac': ('n', 'r', 'l_max', 'edgeworth_value', 'gaussian_value'),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment with every default filled in."""

    kind: str
    law: object
    name: str = ''
    n_list: tuple = ()
    interval: tuple = (0.0, 2.0 * math.pi)
    trials: int = 100
    seed: int = DEFAULT_SEED
    r: float = zeros.DEFAULT_R
    theta: float = -1.25
    phase: PhasePolicy = field(default_factory=PhasePolicy)
    workers: int = 1
    q: int = 5
    s: int = 5
    gamma: float = 0.6
    t: float = 1.0
    b: float = None
    C: float = None
    R: float = None
    T_max: float = None
    window: float = 1.0
    n: int = None
    mode: str = 'cdf-check'

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"kind must be one of {', '.join(EXPERIMENT_KINDS)}, got {self.kind!r}")
        if int(self.trials) < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        lo, hi = self.interval
        if not lo < hi:
            raise ConfigError(f"interval must satisfy lo < hi, got {list(self.interval)}")
        if not 1.2 < self.r < 1.5:
            raise ConfigError(f"r must lie in (1.2, 1.5), got {self.r}")
        if self.mode not in ('cdf-check', 'kac-functional'):
            raise ConfigError(f"edgeworth mode must be cdf-check or kac-functional, got {self.mode!r}")

    @classmethod
    def from_dict(cls, spec, defaults=None):
        """
        Build a config from a mapping, with suite-level ``defaults`` (seed, workers)
        applied before the experiment's own keys.
        """
        merged = dict(defaults or {})
        merged.update(spec)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(merged) - known)
        if unknown:
            logger.warning("ignoring unknown config keys: %s", ', '.join(unknown))
        if 'kind' not in merged or 'law' not in merged:
            raise ConfigError("an experiment needs at least 'kind' and 'law'")
        values = {key: merged[key] for key in known if key in merged}
        if 'n_list' in values:
            values['n_list'] = tuple(int(n) for n in values['n_list'])
        if 'interval' in values:
            values['interval'] = tuple(float(v) for v in values['interval'])
        if 'phase' in values:
            values['phase'] = PhasePolicy.from_dict(values['phase'])
        for key in ('trials', 'seed', 'workers', 'q', 's'):
            if key in values:
                values[key] = int(values[key])
        for key in ('r', 'theta', 'gamma', 't', 'window'):
            if key in values:
                values[key] = float(values[key])
        if values.get('n') is not None:
            values['n'] = int(values['n'])
        values.setdefault('name', str(merged['kind']))
        return cls(**values)

    def build_law(self):
        """The coefficient law, standardized when the description is not."""
        law = law_from_dict(self.law)
        if not is_standardized(law):
            logger.info("standardizing law %s", self.name)
            law = standardize(law)
        return law

    def to_dict(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, PhasePolicy):
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    def provenance_hash(self):
        """Hash of the config without the worker count, which never changes results."""
        spec = self.to_dict()
        spec.pop('workers')
        return config_hash(spec)


@dataclass
class ExperimentReport:
    kind: str
    name: str
    header: tuple
    rows: list
    provenance: dict
    flags: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def uncertified_excess(self):
        return any(flag.startswith('uncertified-excess') for flag in self.flags)

    def to_dict(self):
        return {'kind': self.kind, 'name': self.name,
                'rows': [dict(zip(self.header, row)) for row in self.rows],
                'provenance': self.provenance, 'flags': list(self.flags), 'summary': self.summary}


def _provenance(config):
    from . import __version__

    return {'seed': config.seed, 'config_hash': config.provenance_hash(), 'version': __version__}


def _map(worker, jobs, workers):
    """Ordered map over a process pool; in-process when workers == 1."""
    if workers > 1 and len(jobs) > 1:
        with mp.Pool(workers) as pool:
            return pool.map(worker, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
    return [worker(job) for job in jobs]


def _log_event(log_file, start_time, event, n=0):
    if log_file is not None:
        write_log(log_file, start_time, event, n)
        log_file.flush()


def _retry_attempts(n):
    """Attempts per trial, each on a doubled grid: 2 up to n = 32, one more per doubling of n."""
    return max(2, int(math.log2(max(n, 2))) - 3)


def _universality_trial(job):
    """(kac-rice count, certified, sign-change count, certified) for one trial."""
    law, n, interval, seed, trial, r, phase = job
    poly = sample_polynomial(law, n, phase, make_stream(seed, n, trial))
    m = zeros.default_grid(n, interval, 'normalized')
    attempts = _retry_attempts(n)
    for attempt in range(attempts):
        threshold = zeros.estimate_threshold(poly, interval, 'normalized', m)
        delta = zeros.default_delta(threshold, n, r)
        kac = zeros.kac_rice_count(poly, interval, 'normalized', delta, threshold, m)
        signs = zeros.count_sign_changes(poly, interval, 'normalized', m, refine=False)
        if kac.certified and signs.certified:
            break
        if attempt + 1 < attempts:
            logger.debug("trial %d at n=%d uncertified (%s); doubling grid", trial, n, kac.flags)
            m *= 2
    return kac.count, kac.certified, signs.count, signs.certified


def run_universality(config, log_file=None, start_time=None):
    """
    Mean number of zeros of u_n over ``config.interval`` per n, against the
    finite-n Gaussian reference and the limit (b - a) / (pi sqrt 3).
    """
    law = config.build_law()
    lo, hi = config.interval
    rows, flags = [], []
    for n in config.n_list:
        jobs = [(law, n, config.interval, config.seed, trial, config.r, config.phase)
                for trial in range(config.trials)]
        results = _map(_universality_trial, jobs, config.workers)
        kac_counts = np.array([res[0] for res in results], dtype=float)
        sign_counts = np.array([res[2] for res in results], dtype=float)
        both = np.array([res[1] and res[3] for res in results])
        counts = np.where([res[1] for res in results], kac_counts, sign_counts)

        mean = float(np.mean(counts))
        se = float(np.std(counts, ddof=1) / math.sqrt(counts.size)) if counts.size > 1 else 0.0
        certified = float(np.mean(both))
        agreement = float(np.mean(kac_counts[both] == sign_counts[both])) if both.any() else float('nan')
        if 1.0 - certified > UNCERTIFIED_TOLERANCE:
            flags.append(f'uncertified-excess n={n}')
            logger.warning("n=%d: %.1f%% of trials uncertified after re-run", n, 100.0 * (1.0 - certified))
        reference = gaussian_reference.exact_expected_zeros(n, config.interval) / n
        rows.append((n, config.trials, mean, se, mean / n, reference,
                     (hi - lo) / (math.pi * math.sqrt(3.0)), certified, agreement))
        logger.info("universality n=%d: mean/n=%.6f (reference %.6f)", n, mean / n, reference)
        _log_event(log_file, start_time, 'n_done', n)
    return ExperimentReport('universality', config.name, HEADERS['universality'], rows,
                            _provenance(config), flags)


def _threshold_trial(job):
    law, n, interval, seed, trial, phase = job
    poly = sample_polynomial(law, n, phase, make_stream(seed, n, trial))
    lo, hi = interval
    return zeros.estimate_threshold(poly, (lo * n, hi * n), 'rescaled').omega_lower


def run_threshold(config, log_file=None, start_time=None):
    """
    Frequency of omega_lower < n^theta for the rescaled polynomial on [a n, b n].

    omega_lower never exceeds the true infimum, so the frequency over-counts.
    """
    law = config.build_law()
    rows = []
    for n in config.n_list:
        jobs = [(law, n, config.interval, config.seed, trial, config.phase) for trial in range(config.trials)]
        omegas = np.array(_map(_threshold_trial, jobs, config.workers))
        level = float(n) ** config.theta
        rows.append((n, config.trials, config.theta, float(np.mean(omegas < level)),
                     float(np.mean(omegas)), float(np.mean(omegas > 0))))
        logger.info("threshold n=%d: P(omega < n^%g) <= %.4f", n, config.theta, rows[-1][3])
        _log_event(log_file, start_time, 'n_done', n)
    return ExperimentReport('threshold', config.name, HEADERS['threshold'], rows, _provenance(config))


def run_small_ball(config, log_file=None, start_time=None):
    law = config.build_law()
    estimates = []
    for n in config.n_list:
        estimates.append(smallball.small_ball_mc(law, n, config.t, config.gamma, config.trials, config.seed,
                                                 config.workers, config.phase.phases(n), config.name,
                                                 config.b))
        _log_event(log_file, start_time, 'n_done', n)
    rows = [(e.n, e.gamma, e.trials, e.hits, e.estimate, e.se) for e in estimates]
    summary = {'estimates': [e.to_dict() for e in estimates]}
    try:
        slope, intercept, residual = smallball.fit_decay_exponent(estimates)
        summary['decay'] = {'slope': slope, 'intercept': intercept, 'residual': residual}
    except InsufficientDataError as e:
        logger.warning("no decay fit for %s: %s", config.name, e)
    return ExperimentReport('small-ball', config.name, HEADERS['small-ball'], rows, _provenance(config),
                            summary=summary)


def run_cramer(config, log_file=None, start_time=None):
    for key in ('b', 'C', 'R'):
        if getattr(config, key) is None:
            raise ConfigError(f"cramer experiment needs {key}")
    law = law_from_dict(config.law)
    T_max = cramer.DEFAULT_T_MAX if config.T_max is None else config.T_max
    table = cramer.envelope(law, config.R, T_max, config.window)
    certificate = cramer.probe_weak_cramer(law, config.b, config.C, config.R, T_max,
                                           config.window, table)
    summary = {'certificate': certificate.to_dict()}
    try:
        b_hat, c_hat, residual = cramer.fit_cramer_exponent(table)
        summary['fit'] = {'b': b_hat, 'C': c_hat, 'residual': residual}
    except (InsufficientDataError, FlatEnvelopeError) as e:
        logger.warning("no Cramer exponent fit for %s: %s", config.name, e)
    _log_event(log_file, start_time, 'probe_done', 0)
    return ExperimentReport('cramer', config.name, HEADERS['cramer'], list(table.rows()),
                            _provenance(config), summary=summary)


def run_edgeworth(config, log_file=None, start_time=None):
    """
    ``cdf-check`` compares the exact law of the normalized sum with Phi and the
    Edgeworth CDF; ``kac-functional`` evaluates the corrected Kac functional.
    """
    law = config.build_law()
    if config.mode == 'kac-functional':
        n_list = config.n_list or ((config.n,) if config.n is not None else ())
        if not n_list:
            raise ConfigError("edgeworth kac-functional needs n or n_list")
        rows = []
        for n in n_list:
            family = SummandFamily(law, n, config.t, config.phase.phases(n))
            table = edgeworth.average_cumulants(family, s=4)
            rows.append((n, config.r, 2, edgeworth.edgeworth_kac_functional(table, n, config.r, 2),
                         gaussian_reference.gaussian_kac_functional(n, config.r)))
            _log_event(log_file, start_time, 'n_done', n)
        return ExperimentReport('edgeworth', config.name, HEADERS['edgeworth-kac'], rows, _provenance(config))

    if config.n is None:
        raise ConfigError("edgeworth cdf-check needs n")
    oracle = edgeworth.exact_sum_cdf_oracle(law, config.n)
    s = min(config.s, edgeworth.MAX_CUMULANT_ORDER)
    table = edgeworth.average_cumulants(law, s=s)

    def expansion(x):
        return edgeworth.edgeworth_cdf_1d(table, config.n, s, x)

    x = np.linspace(-4.0, 4.0, 161)
    rows = list(zip(x.tolist(), oracle.cdf(x).tolist(), special.ndtr(x).tolist(), expansion(x).tolist()))
    gaussian_distance = edgeworth.kolmogorov_distance(oracle, special.ndtr)
    expansion_distance = edgeworth.kolmogorov_distance(oracle, expansion)
    summary = {'s': s, 'n': config.n, 'kolmogorov_gaussian': gaussian_distance,
               'kolmogorov_edgeworth': expansion_distance,
               'ratio': expansion_distance / gaussian_distance if gaussian_distance > 0 else float('nan')}
    _log_event(log_file, start_time, 'n_done', config.n)
    return ExperimentReport('edgeworth', config.name, HEADERS['edgeworth'], rows, _provenance(config),
                            summary=summary)


RUNNERS = {
    'universality': run_universality,
    'threshold': run_threshold,
    'small-ball': run_small_ball,
    'cramer': run_cramer,
    'edgeworth': run_edgeworth,
}


def run_experiment(config, log_file=None, start_time=None):
    start_time = time.time() if start_time is None else start_time
    _log_event(log_file, start_time, f'start_{config.name}', 0)
    report = RUNNERS[config.kind](config, log_file, start_time)
    _log_event(log_file, start_time, f'end_{config.name}', len(report.rows))
    return report


def write_report(report, out_dir):
    """Write ``<name>.csv`` and ``<name>.json`` into out_dir; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f'{report.name}.csv')
    json_path = os.path.join(out_dir, f'{report.name}.json')
    write_csv(csv_path, report.header, report.rows)
    with open(json_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + '\n')
    return csv_path, json_path


def run_suite(config_path, out_dir, workers=None, log_dir=None, seed=None):
    """
    Run every experiment of a suite file and write its reports.

    Suite-level ``seed`` and ``workers`` act as defaults; the ``workers`` and
    ``seed`` arguments override both.  A ``report.json`` index lists every
    experiment with its provenance.

    Returns
    -------
    list of ExperimentReport
    """
    suite = load_config(config_path) if isinstance(config_path, (str, os.PathLike)) else config_path
    defaults = {'seed': suite.get('seed', DEFAULT_SEED), 'workers': suite.get('workers', 1)}
    overrides = {}
    if workers is not None:
        overrides['workers'] = int(workers)
    if seed is not None:
        overrides['seed'] = int(seed)

    log_file = initialize_log(log_dir) if log_dir is not None else None
    start_time = time.time()
    reports = []
    try:
        for spec in suite.get('experiments', []) or []:
            config = ExperimentConfig.from_dict({**spec, **overrides}, defaults)
            logger.info("running %s (%s)", config.name, config.kind)
            report = run_experiment(config, log_file, start_time)
            write_report(report, out_dir)
            reports.append(report)
    finally:
        if log_file is not None:
            log_file.close()

    os.makedirs(out_dir, exist_ok=True)
    index = {'experiments': [{'name': r.name, 'kind': r.kind, 'provenance': r.provenance, 'flags': r.flags}
                             for r in reports]}
    with open(os.path.join(out_dir, 'report.json'), 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(index, indent=2, sort_keys=True) + '\n')
    return reports
