"""Tests for the closed-form Gaussian oracles."""
import math

import numpy as np
import pytest

from trigzeros.errors import ContractError
from trigzeros.gaussian_reference import (KAC_LIMIT, SpectralMoments, covariance_matrix, exact_expected_zeros,
                                          gaussian_kac_functional, gaussian_small_ball)


def test_expected_zeros_at_fifty():
    assert exact_expected_zeros(50) == pytest.approx(58.60034, abs=1e-5)


def test_expected_zeros_scale_with_interval():
    assert exact_expected_zeros(40, (0.0, math.pi)) == pytest.approx(0.5 * exact_expected_zeros(40))


def test_expected_zeros_per_degree_tends_to_limit():
    ratios = [exact_expected_zeros(n) / n for n in (10, 100, 1000, 10000)]
    limit = 2.0 / math.sqrt(3.0)
    errors = [abs(r - limit) for r in ratios]
    assert errors == sorted(errors, reverse=True)
    assert errors[-1] < 1e-3


def test_spectral_moments():
    moments = SpectralMoments.of(3)
    assert moments.lambda2 == 14.0
    assert moments.sigma2 == pytest.approx(4 * 7 / 54.0)
    np.testing.assert_allclose(covariance_matrix(3), np.diag([1.0, moments.sigma2]))
    with pytest.raises(ContractError):
        SpectralMoments.of(0)


def test_kac_functional_limit():
    assert KAC_LIMIT == pytest.approx(0.1837762, abs=1e-7)
    assert gaussian_kac_functional(10 ** 4, 1.3) == pytest.approx(0.1837762, abs=1e-3)
    errors = [abs(gaussian_kac_functional(n, 1.3) - KAC_LIMIT) for n in (100, 1000, 10000)]
    assert errors[0] > errors[1] > errors[2]


def test_kac_functional_with_explicit_delta():
    sigma = math.sqrt(SpectralMoments.of(20).sigma2)
    value = gaussian_kac_functional(20, 1.3, delta=1e-3)
    assert value == pytest.approx(sigma * math.sqrt(2.0 / math.pi) * math.erf(1e-3 / math.sqrt(2.0)), rel=1e-12)


def test_small_ball_closed_form():
    assert gaussian_small_ball(1.0, 0.1) == pytest.approx(1.0 - math.exp(-0.005), abs=1e-8)
    assert gaussian_small_ball(1.0, 0.1) == pytest.approx(0.00498752, abs=1e-8)


def test_small_ball_is_monotone_in_sigma():
    assert gaussian_small_ball(0.5, 0.2) > gaussian_small_ball(1.0, 0.2) > gaussian_small_ball(2.0, 0.2)
    with pytest.raises(ContractError):
        gaussian_small_ball(0.0, 0.1)


@pytest.mark.parametrize('delta, rel', [(0.05, 1e-2), (1e-2, 1e-3), (1e-3, 1e-5)])
def test_small_ball_approaches_disc_area_times_density(delta, rel):
    sigma = 1.0 / math.sqrt(3.0)
    assert gaussian_small_ball(sigma, delta) == pytest.approx(delta ** 2 / (2.0 * sigma), rel=rel)
    if delta == 0.05:
        assert gaussian_small_ball(sigma, delta) == pytest.approx(0.00216506, rel=1e-2)
