"""
trigzeros: zeros of random trigonometric polynomials

Certified zero counting, Gaussian reference values, small-ball and Cramer
probes, Edgeworth expansions and a reproducible Monte Carlo harness.
"""

__version__ = "0.1.0"
__author__ = "trigzeros development team"

from .distributions import (law_from_dict, law_to_dict, make_blocked_cosine, make_cos_atoms,
                            make_rademacher, make_random_atoms, make_sqrt_poisson, make_sqrt_primes,
                            moments, standardize)
from .trigpoly import PhasePolicy, SummandFamily, TrigPolynomial, sample_polynomial
from .zeros import count_sign_changes, estimate_threshold, kac_rice_count
from .gaussian_reference import exact_expected_zeros, gaussian_kac_functional, gaussian_small_ball
from .smallball import small_ball_mc
from .edgeworth import average_cumulants, edgeworth_cdf_1d, exact_sum_cdf_oracle
from .harness import ExperimentConfig, run_suite
from .cli import main
from .utils import generate_config_template, setup_config

__all__ = [
    'law_from_dict',
    'law_to_dict',
    'make_blocked_cosine',
    'make_cos_atoms',
    'make_rademacher',
    'make_random_atoms',
    'make_sqrt_poisson',
    'make_sqrt_primes',
    'moments',
    'standardize',
    'PhasePolicy',
    'SummandFamily',
    'TrigPolynomial',
    'sample_polynomial',
    'count_sign_changes',
    'estimate_threshold',
    'kac_rice_count',
    'exact_expected_zeros',
    'gaussian_kac_functional',
    'gaussian_small_ball',
    'small_ball_mc',
    'average_cumulants',
    'edgeworth_cdf_1d',
    'exact_sum_cdf_oracle',
    'ExperimentConfig',
    'run_suite',
    'main',
    'generate_config_template',
    'setup_config',
]
