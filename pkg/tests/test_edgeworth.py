"""Tests for Edgeworth expansions, the convolution oracle and the Kac functional."""
import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from trigzeros import edgeworth
from trigzeros.distributions import (DiscreteAtoms, Gaussian, UniformInterval, make_rademacher, make_sqrt_primes,
                                     standardize)
from trigzeros.edgeworth import CumulantTable, DiscreteCDF
from trigzeros.errors import ContractError, UnsupportedOrderError
from trigzeros.gaussian_reference import gaussian_kac_functional
from trigzeros.trigpoly import SummandFamily

# standardized exponential law: kappa_j = (j - 1)!
EXPONENTIAL = CumulantTable.from_cumulants([0.0, 1.0, 2.0, 6.0, 24.0])


def _phi(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def test_rademacher_cumulant_table():
    table = edgeworth.average_cumulants(make_rademacher(), s=4)
    assert table.dimension == 1
    assert table[(1,)] == 0.0
    assert table[(2,)] == 1.0
    assert table[(3,)] == pytest.approx(0.0, abs=1e-15)
    assert table[(4,)] == pytest.approx(-2.0)


def test_identical_copies_give_the_law_cumulants():
    law = make_sqrt_primes()
    single = edgeworth.average_cumulants(law, s=5)
    copies = edgeworth.average_cumulants([law] * 7, s=5)
    for j in range(1, 6):
        assert copies[(j,)] == pytest.approx(single[(j,)], abs=1e-14)


def test_cumulant_order_limit():
    with pytest.raises(UnsupportedOrderError):
        edgeworth.average_cumulants(make_rademacher(), s=7)


def test_bivariate_gaussian_table():
    table = edgeworth.average_cumulants(SummandFamily(Gaussian(), 40), s=4)
    assert table.dimension == 2
    assert table[(2, 0)] == pytest.approx(1.0, abs=1e-10)
    assert table[(0, 2)] == pytest.approx(1.0, abs=1e-10)
    assert table[(1, 1)] == pytest.approx(0.0, abs=1e-10)
    for nu, value in table.chi.items():
        if sum(nu) >= 3:
            assert abs(value) < 1e-12


def test_skewness_correction_closed_form():
    table = CumulantTable.from_cumulants([0.0, 1.0, 1.0])
    assert edgeworth.edgeworth_cdf_1d(table, 1, 3, 0.0) == pytest.approx(0.5 + _phi(0.0) / 6.0, abs=1e-12)
    assert edgeworth.edgeworth_cdf_1d(table, 1, 3, 0.0) == pytest.approx(0.5664904, abs=1e-7)
    x = np.linspace(-3.0, 3.0, 13)
    n = 16
    expected = special.ndtr(x) - (x * x - 1.0) * np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi) / (6 * math.sqrt(n))
    np.testing.assert_allclose(edgeworth.edgeworth_cdf_1d(table, n, 3, x), expected, atol=1e-14)


def test_no_corrections_is_gaussian():
    x = np.linspace(-5.0, 5.0, 101)
    table = edgeworth.average_cumulants(make_sqrt_primes(), s=4)
    np.testing.assert_allclose(edgeworth.edgeworth_cdf_1d(table, 9, 2, x), special.ndtr(x), atol=1e-12)
    gaussian_table = edgeworth.average_cumulants(Gaussian(), s=5)
    np.testing.assert_allclose(edgeworth.edgeworth_cdf_1d(gaussian_table, 9, 5, x), special.ndtr(x), atol=1e-15)


def test_tails_reach_zero_and_one():
    table = CumulantTable.from_cumulants([0.0, 1.0, 1.0])
    assert edgeworth.edgeworth_cdf_1d(table, 1, 3, -8.0) == pytest.approx(0.0, abs=1e-9)
    assert edgeworth.edgeworth_cdf_1d(table, 1, 3, 8.0) == pytest.approx(1.0, abs=1e-9)


def test_density_integrates_to_one():
    for s in (3, 4, 5):
        mass, _ = integrate.quad(lambda x: edgeworth.edgeworth_density_1d(EXPONENTIAL, 10, s, x), -12.0, 12.0,
                                 epsabs=1e-12, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-9)


def test_density_is_cdf_derivative():
    x, h = 0.7, 1e-5
    slope = (edgeworth.edgeworth_cdf_1d(EXPONENTIAL, 10, 5, x + h)
             - edgeworth.edgeworth_cdf_1d(EXPONENTIAL, 10, 5, x - h)) / (2 * h)
    assert slope == pytest.approx(edgeworth.edgeworth_density_1d(EXPONENTIAL, 10, 5, x), rel=1e-6)


def test_skewness_term_improves_on_gamma_sums():
    """Standardized sums of exponentials have an exact Gamma law."""
    for n in (5, 20, 80):
        x = np.linspace(-4.0, 6.0, 4001)
        exact = stats.gamma.cdf(n + x * math.sqrt(n), n)
        gaussian_error = np.max(np.abs(exact - special.ndtr(x)))
        corrected_error = np.max(np.abs(exact - edgeworth.edgeworth_cdf_1d(EXPONENTIAL, n, 3, x)))
        assert corrected_error < gaussian_error


def test_oracle_rademacher():
    oracle = edgeworth.exact_sum_cdf_oracle(make_rademacher(), 2)
    np.testing.assert_allclose(oracle.atoms, [-math.sqrt(2.0), 0.0, math.sqrt(2.0)])
    np.testing.assert_allclose(oracle.weights, [0.25, 0.5, 0.25])
    four = edgeworth.exact_sum_cdf_oracle(make_rademacher(), 4)
    assert four.weights[np.argmin(np.abs(four.atoms))] == pytest.approx(6.0 / 16.0)
    assert float(four.cdf(0.0)) == pytest.approx(11.0 / 16.0)
    assert float(four.cdf_left(0.0)) == pytest.approx(5.0 / 16.0)


def test_oracle_sqrt_primes_total_mass():
    oracle = edgeworth.exact_sum_cdf_oracle(make_sqrt_primes(), 9)
    assert oracle.total == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(oracle.atoms) > 0)
    mean = float(oracle.weights @ oracle.atoms)
    variance = float(oracle.weights @ oracle.atoms ** 2) - mean ** 2
    assert mean == pytest.approx(0.0, abs=1e-10)
    assert variance == pytest.approx(1.0, abs=1e-10)


def test_oracle_limits():
    with pytest.raises(ContractError):
        edgeworth.exact_sum_cdf_oracle(make_rademacher(), 11)
    with pytest.raises(ContractError):
        edgeworth.exact_sum_cdf_oracle(DiscreteAtoms(np.arange(12.0), np.full(12, 1.0 / 12)), 7)


def test_kolmogorov_distance():
    oracle = edgeworth.exact_sum_cdf_oracle(make_sqrt_primes(), 5)
    assert edgeworth.kolmogorov_distance(oracle, oracle) == 0.0
    unit_mass = DiscreteCDF(np.array([0.0]), np.array([1.0]))
    assert edgeworth.kolmogorov_distance(unit_mass, special.ndtr) == pytest.approx(0.5)
    assert edgeworth.kolmogorov_distance(special.ndtr, special.ndtr) == 0.0


def test_oracle_approaches_gaussian():
    distances = [edgeworth.kolmogorov_distance(edgeworth.exact_sum_cdf_oracle(make_sqrt_primes(), n), special.ndtr)
                 for n in (1, 9)]
    assert distances[1] < distances[0]


def test_kac_functional_reduces_to_gaussian():
    n, r = 1000, 1.3
    gaussian_table = edgeworth.average_cumulants(SummandFamily(Gaussian(), n), s=4)
    assert edgeworth.edgeworth_kac_functional(gaussian_table, n, r, 2) == pytest.approx(
        gaussian_kac_functional(n, r), rel=1e-12)
    discrete_table = edgeworth.average_cumulants(SummandFamily(make_sqrt_primes(), n), s=4)
    assert edgeworth.edgeworth_kac_functional(discrete_table, n, r, 0) == pytest.approx(
        gaussian_kac_functional(n, r), rel=1e-12)


def test_symmetric_law_has_no_first_correction():
    table = edgeworth.average_cumulants(SummandFamily(make_rademacher(), 200), s=4)
    first = edgeworth.edgeworth_kac_functional(table, 200, 1.3, 1)
    zeroth = edgeworth.edgeworth_kac_functional(table, 200, 1.3, 0)
    assert first == pytest.approx(zeroth, rel=1e-14)


def test_kac_functional_for_sqrt_primes():
    n = 10 ** 4
    table = edgeworth.average_cumulants(SummandFamily(make_sqrt_primes(), n), s=4)
    value = edgeworth.edgeworth_kac_functional(table, n, 1.3, 2)
    assert value == pytest.approx(0.1837762, abs=5e-3)
    assert abs(value - gaussian_kac_functional(n, 1.3)) < 1.0 / math.sqrt(n)


def test_kac_functional_contracts():
    table = edgeworth.average_cumulants(make_rademacher(), s=4)
    with pytest.raises(ContractError):
        edgeworth.edgeworth_kac_functional(table, 10, 1.3)
    family_table = edgeworth.average_cumulants(SummandFamily(Gaussian(), 10), s=4)
    with pytest.raises(UnsupportedOrderError):
        edgeworth.edgeworth_kac_functional(family_table, 10, 1.3, 3)


def test_averaged_modulus_is_linear_in_eps():
    assert edgeworth.gaussian_averaged_modulus(0.1, 0.0) == 0.0
    ratios = [edgeworth.gaussian_averaged_modulus(0.1, eps) / eps for eps in (1e-2, 1e-3, 1e-4)]
    assert max(ratios) / min(ratios) < 1.2
    # far from the band edge only the |y| factor oscillates
    assert edgeworth.gaussian_averaged_modulus(10.0, 1e-4) / 1e-4 == pytest.approx(2.0, rel=1e-3)


def _sampled_box_extremes(grid, eps, fun, samples=201):
    offsets = np.linspace(-eps, eps, samples)
    values = fun(grid[:, None] + offsets[None, :])
    return values.max(axis=1), values.min(axis=1)


def test_averaged_modulus_against_brute_force():
    delta, eps = 0.5, 0.2
    grid = np.linspace(-8.0, 8.0, 16001)
    density = np.exp(-0.5 * grid ** 2) / math.sqrt(2 * math.pi)
    ind_sup, ind_inf = _sampled_box_extremes(grid, eps, lambda x: (np.abs(x) < delta).astype(float))
    abs_sup, abs_inf = _sampled_box_extremes(grid, eps, np.abs)
    def expectation(values):
        return integrate.trapezoid(density * values, grid)

    brute = expectation(ind_sup) * expectation(abs_sup) - expectation(ind_inf) * expectation(abs_inf)
    assert edgeworth.gaussian_averaged_modulus(delta, eps) == pytest.approx(brute, rel=1e-2)


# measured sup distances of the sqrt-primes oracle to Phi and to the s = 3 expansion
SQRT_PRIMES_DISTANCES = {5: (0.0343, 0.0319), 7: (0.0233, 0.0238), 9: (0.0184, 0.0177)}


def _sqrt_primes_distances(n):
    law = make_sqrt_primes()
    table = edgeworth.average_cumulants(law, s=3)
    oracle = edgeworth.exact_sum_cdf_oracle(law, n)
    expansion = edgeworth.kolmogorov_distance(oracle, lambda x: edgeworth.edgeworth_cdf_1d(table, n, 3, x))
    return oracle, edgeworth.kolmogorov_distance(oracle, special.ndtr), expansion


@pytest.mark.parametrize('n', sorted(SQRT_PRIMES_DISTANCES))
def test_sqrt_primes_distances_are_pinned(n):
    oracle, gaussian, expansion = _sqrt_primes_distances(n)
    expected_gaussian, expected_expansion = SQRT_PRIMES_DISTANCES[n]
    assert gaussian == pytest.approx(expected_gaussian, abs=5e-4)
    assert expansion == pytest.approx(expected_expansion, abs=5e-4)
    # a continuous approximation misses every jump by at least half its size
    assert min(gaussian, expansion) >= 0.5 * oracle.weights.max() - 1e-15


def test_sqrt_primes_jumps_dominate_the_skewness_term():
    oracle, gaussian, expansion = _sqrt_primes_distances(9)
    assert oracle.weights.max() == pytest.approx(0.0116, abs=5e-4)
    assert 0.9 < expansion / gaussian < 1.0
    five = _sqrt_primes_distances(5)[1]
    assert five / gaussian == pytest.approx(1.86, abs=0.05)


def test_oracle_needs_a_discrete_law():
    for law in (Gaussian(), standardize(Gaussian(0.0, 4.0)), UniformInterval(-1.0, 1.0)):
        with pytest.raises(ContractError, match='discrete law'):
            edgeworth.exact_sum_cdf_oracle(law, 3)


def test_kac_functional_needs_enough_cumulants():
    table = edgeworth.average_cumulants(SummandFamily(Gaussian(), 10), s=3)
    with pytest.raises(UnsupportedOrderError):
        edgeworth.edgeworth_kac_functional(table, 10, 1.3, 2)
    assert edgeworth.edgeworth_kac_functional(table, 10, 1.3, 1) == pytest.approx(
        gaussian_kac_functional(10, 1.3), rel=1e-10)
