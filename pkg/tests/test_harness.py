"""Tests for experiment configs, runners, reports and suites."""
import json
import math
import os

import pytest
import yaml

from trigzeros import harness
from trigzeros.errors import ConfigError, ContractError
from trigzeros.gaussian_reference import exact_expected_zeros, gaussian_kac_functional
from trigzeros.harness import ExperimentConfig

GAUSSIAN = {'kind': 'gaussian'}


def test_config_defaults():
    config = ExperimentConfig.from_dict({'kind': 'universality', 'law': GAUSSIAN, 'n_list': [10, 20]})
    assert config.name == 'universality'
    assert config.n_list == (10, 20)
    assert config.interval == (0.0, 2.0 * math.pi)
    assert config.seed == harness.DEFAULT_SEED
    assert config.r == 1.3
    assert config.workers == 1


def test_suite_defaults_apply_before_experiment_keys():
    config = ExperimentConfig.from_dict({'kind': 'threshold', 'law': GAUSSIAN, 'seed': 5},
                                        {'seed': 1, 'workers': 3})
    assert config.seed == 5
    assert config.workers == 3


@pytest.mark.parametrize('spec', [
    {'kind': 'bogus', 'law': GAUSSIAN},
    {'kind': 'universality', 'law': GAUSSIAN, 'r': 1.6},
    {'kind': 'universality', 'law': GAUSSIAN, 'trials': 0},
    {'kind': 'universality', 'law': GAUSSIAN, 'interval': [1.0, 0.0]},
    {'kind': 'edgeworth', 'law': GAUSSIAN, 'mode': 'pdf'},
    {'kind': 'universality'},
])
def test_invalid_configs(spec):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(spec)


def test_provenance_hash_ignores_workers():
    one = ExperimentConfig.from_dict({'kind': 'universality', 'law': GAUSSIAN, 'n_list': [10], 'workers': 1})
    four = ExperimentConfig.from_dict({'kind': 'universality', 'law': GAUSSIAN, 'n_list': [10], 'workers': 4})
    other = ExperimentConfig.from_dict({'kind': 'universality', 'law': GAUSSIAN, 'n_list': [10], 'seed': 3})
    assert one.provenance_hash() == four.provenance_hash()
    assert one.provenance_hash() != other.provenance_hash()


def test_build_law_standardizes():
    config = ExperimentConfig.from_dict({'kind': 'threshold', 'law': {'kind': 'uniform',
                                                                       'params': {'lo': 0.0, 'hi': 1.0}}})
    mean, variance = config.build_law().mean_variance()
    assert mean == pytest.approx(0.0, abs=1e-12)
    assert variance == pytest.approx(1.0)


def test_universality_matches_gaussian_reference():
    config = ExperimentConfig.from_dict({'kind': 'universality', 'law': GAUSSIAN, 'n_list': [10],
                                         'trials': 30})
    report = harness.run_experiment(config)
    row = dict(zip(report.header, report.rows[0]))
    assert row['n'] == 10
    assert row['trials'] == 30
    expected = exact_expected_zeros(10, (0.0, 2.0 * math.pi))
    assert abs(row['mean_count'] - expected) < max(5.0 * row['se'], 0.5)
    assert row['reference_over_n'] == pytest.approx(expected / 10)
    assert row['limit_over_n'] == pytest.approx(2.0 / math.sqrt(3.0))
    assert 0.0 <= row['certified_fraction'] <= 1.0
    assert report.provenance['seed'] == harness.DEFAULT_SEED


def test_results_do_not_depend_on_worker_count():
    spec = {'kind': 'universality', 'law': 'rademacher', 'n_list': [8], 'trials': 6}
    serial = harness.run_experiment(ExperimentConfig.from_dict({**spec, 'workers': 1}))
    parallel = harness.run_experiment(ExperimentConfig.from_dict({**spec, 'workers': 2}))
    assert serial.rows == parallel.rows
    assert serial.provenance == parallel.provenance


def test_threshold_above_every_value():
    config = ExperimentConfig.from_dict({'kind': 'threshold', 'law': GAUSSIAN, 'n_list': [10], 'trials': 5,
                                         'theta': 1.0})
    report = harness.run_experiment(config)
    row = dict(zip(report.header, report.rows[0]))
    assert row['below_fraction'] == 1.0
    assert 0.0 <= row['mean_omega_lower'] < 10.0


def test_cramer_rademacher_fails():
    config = ExperimentConfig.from_dict({'kind': 'cramer', 'law': 'rademacher', 'b': 1.0, 'C': 0.001,
                                         'R': 4.0, 'T_max': 9.0})
    report = harness.run_experiment(config)
    assert report.summary['certificate']['verdict'] == 'fail'
    assert report.header == harness.HEADERS['cramer']
    assert max(row[1] for row in report.rows) >= 1.0 - 1e-8


def test_cramer_needs_parameters():
    config = ExperimentConfig.from_dict({'kind': 'cramer', 'law': 'rademacher', 'b': 1.0})
    with pytest.raises(ConfigError):
        harness.run_experiment(config)


def test_edgeworth_cdf_check():
    config = ExperimentConfig.from_dict({'kind': 'edgeworth', 'law': 'sqrt_primes', 'n': 4, 's': 4})
    report = harness.run_experiment(config)
    assert len(report.rows) == 161
    assert report.header == harness.HEADERS['edgeworth']
    assert report.summary['kolmogorov_gaussian'] > 0.0
    assert report.summary['ratio'] == pytest.approx(
        report.summary['kolmogorov_edgeworth'] / report.summary['kolmogorov_gaussian'])
    oracle_column = [row[1] for row in report.rows]
    assert oracle_column == sorted(oracle_column)


def test_edgeworth_kac_functional_for_gaussian_law():
    config = ExperimentConfig.from_dict({'kind': 'edgeworth', 'law': GAUSSIAN, 'mode': 'kac-functional',
                                         'n_list': [100, 400]})
    report = harness.run_experiment(config)
    assert report.header == harness.HEADERS['edgeworth-kac']
    for n, r, l_max, value, gaussian in report.rows:
        assert gaussian == pytest.approx(gaussian_kac_functional(n, 1.3))
        assert value == pytest.approx(gaussian, rel=1e-10)


def test_small_ball_report(tmp_path):
    config = ExperimentConfig.from_dict({'kind': 'small-ball', 'law': 'rademacher', 'n_list': [10, 20],
                                         'trials': 10000, 'gamma': 0.6})
    report = harness.run_experiment(config)
    assert [row[0] for row in report.rows] == [10, 20]
    assert len(report.summary['estimates']) == 2
    csv_path, json_path = harness.write_report(report, str(tmp_path))
    with open(json_path) as f:
        stored = json.load(f)
    assert stored['rows'][0]['n'] == 10
    assert stored['provenance']['config_hash'] == config.provenance_hash()
    with open(csv_path, newline='') as f:
        assert f.readline() == 'n,gamma,trials,hits,estimate,se\n'


def test_empty_suite(tmp_path):
    assert harness.run_suite({'experiments': []}, str(tmp_path)) == []
    with open(tmp_path / 'report.json') as f:
        assert json.load(f) == {'experiments': []}


def _write_suite(path):
    suite = {'seed': 11, 'workers': 1, 'experiments': [
        {'name': 'tiny', 'kind': 'universality', 'law': 'sqrt_primes', 'n_list': [6], 'trials': 6},
        {'name': 'tiny_threshold', 'kind': 'threshold', 'law': GAUSSIAN, 'n_list': [6], 'trials': 4},
    ]}
    with open(path, 'w') as f:
        yaml.safe_dump(suite, f)


def test_suite_csv_is_identical_across_worker_counts(tmp_path):
    config_path = str(tmp_path / 'suite.yaml')
    _write_suite(config_path)
    harness.run_suite(config_path, str(tmp_path / 'one'), workers=1)
    reports = harness.run_suite(config_path, str(tmp_path / 'two'), workers=2)
    assert [report.name for report in reports] == ['tiny', 'tiny_threshold']
    for name in ('tiny.csv', 'tiny_threshold.csv'):
        with open(tmp_path / 'one' / name, 'rb') as a, open(tmp_path / 'two' / name, 'rb') as b:
            assert a.read() == b.read()
    with open(tmp_path / 'one' / 'report.json') as f:
        index = json.load(f)
    assert [entry['provenance']['seed'] for entry in index['experiments']] == [11, 11]


def test_suite_writes_event_log(tmp_path):
    config_path = str(tmp_path / 'suite.yaml')
    _write_suite(config_path)
    harness.run_suite(config_path, str(tmp_path / 'out'), log_dir=str(tmp_path / 'log'), seed=3)
    logs = os.listdir(tmp_path / 'log')
    assert len(logs) == 1 and logs[0].endswith('_event.log')
    with open(tmp_path / 'log' / logs[0]) as f:
        lines = f.read().splitlines()
    assert lines[0] == 'time,event,n'
    events = [line.split(',')[1] for line in lines[1:]]
    assert 'start_tiny' in events and 'end_tiny_threshold' in events


def test_invalid_suite_file(tmp_path):
    path = tmp_path / 'bad.yaml'
    path.write_text('experiments:\n  - kind: universality\n')
    with pytest.raises(ConfigError):
        harness.run_suite(str(path), str(tmp_path / 'out'))


@pytest.mark.slow
def test_gaussian_mean_count_at_fifty():
    config = ExperimentConfig.from_dict({'kind': 'universality', 'law': GAUSSIAN, 'n_list': [50],
                                         'trials': 2000, 'workers': os.cpu_count() or 1})
    row = dict(zip(harness.HEADERS['universality'], harness.run_experiment(config).rows[0]))
    assert abs(row['mean_count'] - 58.60034) < 3.0 * row['se']
    assert abs(row['mean_count'] / 58.60034 - 1.0) < 0.015


@pytest.mark.slow
def test_threshold_frequency_decays():
    config = ExperimentConfig.from_dict({'kind': 'threshold', 'law': GAUSSIAN, 'n_list': [10, 80],
                                         'trials': 400, 'workers': os.cpu_count() or 1})
    rows = harness.run_experiment(config).rows
    assert rows[1][3] < rows[0][3]


def test_kac_functional_needs_a_degree():
    config = ExperimentConfig.from_dict({'kind': 'edgeworth', 'law': GAUSSIAN, 'mode': 'kac-functional'})
    with pytest.raises(ConfigError):
        harness.run_experiment(config)


def test_retry_attempts_grow_with_degree():
    assert [harness._retry_attempts(n) for n in (10, 32, 64, 200, 1000)] == [2, 2, 3, 4, 6]


def test_high_degree_sqrt_primes_trials_certify():
    config = ExperimentConfig.from_dict({'kind': 'universality', 'law': 'sqrt_primes', 'n_list': [200],
                                         'seed': 7})
    law = config.build_law()
    for trial in (2, 5, 8):
        kac_count, kac_ok, sign_count, sign_ok = harness._universality_trial(
            (law, 200, config.interval, 7, trial, config.r, config.phase))
        assert kac_ok and sign_ok
        assert kac_count == sign_count


def test_cramer_scan_range_defaults():
    config = ExperimentConfig.from_dict({'kind': 'cramer', 'law': 'rademacher', 'b': 1.0, 'C': 0.001,
                                         'R': 4.0})
    report = harness.run_experiment(config)
    assert report.summary['certificate']['T_max'] == 1e4
    assert report.summary['certificate']['verdict'] == 'fail'


def test_edgeworth_cdf_check_rejects_continuous_law():
    config = ExperimentConfig.from_dict({'kind': 'edgeworth', 'law': {'kind': 'gaussian',
                                                                       'params': {'variance': 4.0}}, 'n': 5})
    with pytest.raises(ContractError, match='discrete law'):
        harness.run_experiment(config)


@pytest.mark.slow
def test_sqrt_primes_mean_count_at_two_hundred():
    config = ExperimentConfig.from_dict({'kind': 'universality', 'law': 'sqrt_primes', 'n_list': [200],
                                         'trials': 1000, 'seed': 7, 'workers': os.cpu_count() or 1})
    report = harness.run_experiment(config)
    row = dict(zip(report.header, report.rows[0]))
    assert row['certified_fraction'] >= 0.99
    assert report.flags == []
    assert abs(row['mean_over_n'] / 1.159030 - 1.0) < 0.02


@pytest.mark.slow
def test_counters_agree_over_the_law_corpus():
    laws = ('gaussian', 'rademacher', 'sqrt_primes', {'kind': 'blocked_cosine', 'params': {'p': 5}})
    certified = total = 0
    for law in laws:
        config = ExperimentConfig.from_dict({'kind': 'universality', 'law': law, 'n_list': [10, 50, 200],
                                             'trials': 42, 'workers': os.cpu_count() or 1})
        for row in harness.run_experiment(config).rows:
            row = dict(zip(harness.HEADERS['universality'], row))
            assert row['agreement_fraction'] == 1.0
            certified += row['certified_fraction'] * row['trials']
            total += row['trials']
    assert certified >= 0.99 * total


@pytest.mark.slow
def test_threshold_frequency_over_the_degree_ladder():
    config = ExperimentConfig.from_dict({'kind': 'threshold', 'law': GAUSSIAN, 'n_list': [50, 100, 200],
                                         'trials': 500, 'theta': -1.25, 'workers': os.cpu_count() or 1})
    fractions = [dict(zip(harness.HEADERS['threshold'], row))['below_fraction']
                 for row in harness.run_experiment(config).rows]
    for previous, current in zip(fractions, fractions[1:]):
        assert current <= previous + 2.0 * math.sqrt(max(previous * (1.0 - previous), 1.0 / 500) / 500)
    assert fractions[-1] <= 0.05
