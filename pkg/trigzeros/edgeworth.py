"""
Edgeworth expansions built from average standardized cumulants.

The correction polynomials are generated rather than tabulated.  Writing
K_j(u) = sum_{|nu| = j + 2} chi_nu u^nu / nu!, the exponential series
exp(sum_j K_j eps^j) = sum_l E_l eps^l obeys l E_l = sum_{j=1}^{l} j K_j E_{l-j}
(the Bell-polynomial recurrence).  Each monomial u^k of E_l becomes the
Hermite function He_k(x) phi(x) (product He_j(x) He_k(y) in two dimensions),
which gives P_l in the density 1 + sum_l n^{-l/2} P_l(x) relative to the
standard Gaussian.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e
from scipy import special
from scipy.signal import convolve2d

from .distributions import DiscreteAtoms, moments
from .errors import ContractError, UnsupportedOrderError
from .trigpoly import SummandFamily

logger = logging.getLogger(__name__)

MAX_CUMULANT_ORDER = 6
MAX_BIVARIATE_CORRECTION = 2
ORACLE_LIMIT = 20_000_000
COLLISION_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class CumulantTable:
    """
    Average whitened cumulants chi_nu, keyed by multi-index tuples.

    ``covariance`` is the mean covariance V_n before whitening and
    ``whitening`` is B_n = V_n^{-1/2}.
    """

    dimension: int
    order: int
    chi: dict
    covariance: np.ndarray
    whitening: np.ndarray

    def __getitem__(self, nu):
        return self.chi.get(tuple(nu), 0.0)

    @classmethod
    def from_cumulants(cls, cumulants):
        """1-D table from standardized cumulants kappa_1..kappa_s (kappa_1 = 0, kappa_2 = 1)."""
        chi = {(j,): float(value) for j, value in enumerate(cumulants, start=1)}
        return cls(dimension=1, order=len(cumulants), chi=chi,
                   covariance=np.eye(1), whitening=np.eye(1))


@dataclass(frozen=True, eq=False)
class EdgeworthApprox:
    """Correction polynomials P_1..P_L as Hermite-basis coefficient arrays."""

    dimension: int
    s: int
    polynomials: tuple

    def correction(self, l):
        return self.polynomials[l - 1]


def _check_order(s):
    if int(s) != s or not 2 <= s <= MAX_CUMULANT_ORDER:
        raise UnsupportedOrderError(f"cumulant order must be in [2, {MAX_CUMULANT_ORDER}], got {s}")
    return int(s)


def _inverse_sqrt(matrix):
    values, vectors = np.linalg.eigh(matrix)
    if np.any(values <= 0):
        raise ContractError("mean covariance is not positive definite")
    return vectors @ np.diag(values ** -0.5) @ vectors.T


def average_cumulants(family, s=4):
    """
    Average cumulants of a summand family, whitened by B_n.

    Parameters
    ----------
    family : law, list of laws, or SummandFamily
        one-dimensional summands, or the bivariate vectors X_{i,n}(t)
    s : int
        highest cumulant order, at most 6

    Returns
    -------
    CumulantTable
    """
    s = _check_order(s)
    if isinstance(family, SummandFamily):
        return _bivariate_cumulants(family, s)
    laws = family if isinstance(family, (list, tuple)) else [family]
    if not laws:
        raise ContractError("average_cumulants needs at least one law")
    kappa = np.mean([moments(law, s).cumulants for law in laws], axis=0)
    variance = kappa[1]
    if not variance > 0:
        raise ContractError("average variance must be positive")
    scale = variance ** -0.5
    chi = {(1,): 0.0}
    chi.update({(j,): float(kappa[j - 1] * scale ** j) for j in range(2, s + 1)})
    chi[(2,)] = 1.0
    return CumulantTable(dimension=1, order=s, chi=chi,
                         covariance=np.array([[variance]]), whitening=np.array([[scale]]))


def _bivariate_cumulants(family, s):
    kappa = moments(family.law, s).cumulants
    maps = family.maps
    covariance = kappa[1] * np.einsum('ijk,ilk->jl', maps, maps) / family.n
    whitening = _inverse_sqrt(covariance)
    white = np.einsum('jk,ikl->ijl', whitening, maps)
    chi = {(1, 0): 0.0, (0, 1): 0.0}
    for total in range(2, s + 1):
        for first in range(total + 1):
            second = total - first
            weight = (white[:, 0, 0] ** first * white[:, 1, 0] ** second
                      + white[:, 0, 1] ** first * white[:, 1, 1] ** second)
            chi[(first, second)] = float(kappa[total - 1] * np.mean(weight))
    return CumulantTable(dimension=2, order=s, chi=chi, covariance=covariance, whitening=whitening)


def _multiply(p, q, dimension):
    if dimension == 1:
        return np.convolve(p, q)
    return convolve2d(p, q)


def _pad(p, size, dimension):
    shape = (size,) * dimension
    out = np.zeros(shape)
    out[tuple(slice(0, k) for k in p.shape)] = p
    return out


def build_edgeworth(table, s, l_max=None):
    """
    Correction polynomials for an expansion of order s.

    One-dimensional tables get P_1..P_{s-2}; bivariate tables stop at
    min(s - 2, l_max, 2).
    """
    s = _check_order(s)
    if table.order < s:
        raise UnsupportedOrderError(f"table holds cumulants to order {table.order}, need {s}")
    dimension = table.dimension
    depth = s - 2
    if dimension == 2:
        depth = min(depth, MAX_BIVARIATE_CORRECTION if l_max is None else l_max)
        if depth > MAX_BIVARIATE_CORRECTION:
            raise UnsupportedOrderError("bivariate corrections stop at l = 2")
    size = 3 * depth + 1

    cumulant_terms = [None]
    for j in range(1, depth + 1):
        term = np.zeros((size,) * dimension)
        for nu, value in table.chi.items():
            if sum(nu) == j + 2 and value != 0.0:
                term[nu] += value / math.prod(math.factorial(k) for k in nu)
        cumulant_terms.append(term)

    unit = np.zeros((1,) * dimension)
    unit[(0,) * dimension] = 1.0
    series = [_pad(unit, size, dimension)]
    for l in range(1, depth + 1):
        acc = np.zeros((size,) * dimension)
        for j in range(1, l + 1):
            product = _multiply(cumulant_terms[j], series[l - j], dimension)
            acc += j * product[tuple(slice(0, size) for _ in range(dimension))]
        series.append(acc / l)
    return EdgeworthApprox(dimension=dimension, s=s, polynomials=tuple(series[1:]))


def _one_dimensional(table, s):
    if table.dimension != 1:
        raise ContractError("expected a one-dimensional cumulant table")
    return build_edgeworth(table, s)


def edgeworth_cdf_1d(table, n, s, x):
    """
    Phi(x) - phi(x) sum_l n^{-l/2} sum_k c_{l,k} He_{k-1}(x).

    Uses that He_k(x) phi(x) has antiderivative -He_{k-1}(x) phi(x) for k >= 1.
    """
    approx = _one_dimensional(table, s)
    x = np.asarray(x, dtype=float)
    value = special.ndtr(x)
    density = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    for l, coefficients in enumerate(approx.polynomials, start=1):
        value = value - float(n) ** (-0.5 * l) * density * hermite_e.hermeval(x, coefficients[1:])
    return float(value) if np.ndim(x) == 0 else value


def edgeworth_density_1d(table, n, s, x):
    """phi(x) (1 + sum_l n^{-l/2} P_l(x))."""
    approx = _one_dimensional(table, s)
    x = np.asarray(x, dtype=float)
    factor = np.ones_like(x)
    for l, coefficients in enumerate(approx.polynomials, start=1):
        factor = factor + float(n) ** (-0.5 * l) * hermite_e.hermeval(x, coefficients)
    value = factor * np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return float(value) if np.ndim(x) == 0 else value


@dataclass(frozen=True, eq=False)
class DiscreteCDF:
    """Right-continuous step CDF with left limits."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'cumulative', np.cumsum(self.weights))

    def cdf(self, x):
        index = np.searchsorted(self.atoms, x, side='right')
        return np.where(index > 0, self.cumulative[np.maximum(index - 1, 0)], 0.0)

    def cdf_left(self, x):
        index = np.searchsorted(self.atoms, x, side='left')
        return np.where(index > 0, self.cumulative[np.maximum(index - 1, 0)], 0.0)

    @property
    def total(self):
        return float(self.cumulative[-1])


def _merge(atoms, weights):
    order = np.argsort(atoms, kind='stable')
    atoms, weights = atoms[order], weights[order]
    gaps = np.diff(atoms) > COLLISION_TOL * np.maximum(1.0, np.abs(atoms[1:]))
    starts = np.concatenate(([0], np.flatnonzero(gaps) + 1))
    return atoms[starts], np.add.reduceat(weights, starts)


def exact_sum_cdf_oracle(law, n):
    """
    Exact law of (X_1 + ... + X_n) / sqrt(n) for a discrete law.

    Iterated convolution over atom lists with colliding atoms merged after
    every step.

    Raises
    ------
    ContractError
        law without a discrete resolution, n outside [1, 10] or more than
        2e7 atom products
    """
    atoms = law.resolve() if hasattr(law, 'resolve') else law
    if not isinstance(atoms, DiscreteAtoms):
        raise ContractError(f"the convolution oracle needs a discrete law, got {type(atoms).__name__}")
    n = int(n)
    if not 1 <= n <= 10:
        raise ContractError(f"oracle supports 1 <= n <= 10, got {n}")
    if atoms.atoms.size ** n > ORACLE_LIMIT:
        raise ContractError(f"{atoms.atoms.size}^{n} atom products exceed {ORACLE_LIMIT}")
    support, mass = atoms.atoms.copy(), atoms.weights.copy()
    for _ in range(n - 1):
        support, mass = _merge(np.add.outer(support, atoms.atoms).ravel(),
                               np.multiply.outer(mass, atoms.weights).ravel())
    logger.debug("oracle for n=%d has %d distinct atoms", n, support.size)
    return DiscreteCDF(atoms=support / math.sqrt(n), weights=mass)


def _cdf_pair(F):
    if isinstance(F, DiscreteCDF):
        return F.cdf, F.cdf_left, F.atoms
    return F, F, np.empty(0)


def kolmogorov_distance(F, G, probes=None):
    """
    sup over probe points of |F - G|, comparing left limits as well.

    Jump points of discrete arguments are always probed; with no jumps and no
    probes a grid on [-8, 8] is used.
    """
    f_right, f_left, f_jumps = _cdf_pair(F)
    g_right, g_left, g_jumps = _cdf_pair(G)
    points = [f_jumps, g_jumps]
    if probes is not None:
        points.append(np.asarray(probes, dtype=float).ravel())
    points = np.concatenate(points)
    if points.size == 0:
        points = np.linspace(-8.0, 8.0, 4001)
    right = np.abs(np.asarray(f_right(points)) - np.asarray(g_right(points)))
    left = np.abs(np.asarray(f_left(points)) - np.asarray(g_left(points)))
    return float(max(np.max(right), np.max(left)))


def _abs_gaussian_moment(q):
    return 2.0 ** (q / 2) * special.gamma((q + 1) / 2) / math.sqrt(math.pi)


def _x_integral(j, bound):
    """Integral of He_j(x) phi(x) over [-bound, bound]."""
    if j == 0:
        return float(special.erf(bound / math.sqrt(2.0)))
    if j % 2 == 1:
        return 0.0
    coefficients = np.zeros(j)
    coefficients[j - 1] = 1.0
    density = math.exp(-0.5 * bound * bound) / math.sqrt(2.0 * math.pi)
    return -2.0 * density * float(hermite_e.hermeval(bound, coefficients))


def _y_integral(k):
    """Integral of |y| He_k(y) phi(y) over the real line."""
    if k % 2 == 1:
        return 0.0
    coefficients = np.zeros(k + 1)
    coefficients[k] = 1.0
    monomials = hermite_e.herme2poly(coefficients)
    return float(sum(c * _abs_gaussian_moment(m + 1) for m, c in enumerate(monomials) if c != 0.0))


def edgeworth_kac_functional(table, n, r, l_max=2):
    """
    (n^r / 2) * integral of |y| 1{|x| < delta} (1 + sum_{l <= l_max} n^{-l/2} P_l) against
    the Gaussian with the table's mean covariance, delta = n^-r.

    The integral factorizes over Hermite products: the x-part is exact through
    He_j phi = -(He_{j-1} phi)' and the y-part uses Gaussian absolute moments.
    """
    if table.dimension != 2:
        raise ContractError("the Kac functional needs a bivariate cumulant table")
    if int(l_max) != l_max or not 0 <= l_max <= MAX_BIVARIATE_CORRECTION:
        raise UnsupportedOrderError("l_max must be 0, 1 or 2")
    if l_max > 0 and table.order < l_max + 2:
        raise UnsupportedOrderError(f"l_max={l_max} needs cumulants through order {l_max + 2}, "
                                    f"table has {table.order}")
    covariance = table.covariance
    if abs(covariance[0, 1]) > 1e-10 * math.sqrt(covariance[0, 0] * covariance[1, 1]):
        raise ContractError("the Kac functional expects a diagonal mean covariance")
    sigma_x, sigma_y = math.sqrt(covariance[0, 0]), math.sqrt(covariance[1, 1])
    delta = float(n) ** (-r)
    bound = delta / sigma_x

    size = 3 * max(int(l_max), 1) + 1
    weights = np.zeros((size, size))
    weights[0, 0] = 1.0
    if l_max > 0:
        approx = build_edgeworth(table, l_max + 2, l_max=l_max)
        for l, coefficients in enumerate(approx.polynomials, start=1):
            weights[:coefficients.shape[0], :coefficients.shape[1]] += float(n) ** (-0.5 * l) * coefficients

    total = 0.0
    for j, k in zip(*np.nonzero(weights)):
        total += weights[j, k] * _x_integral(j, bound) * _y_integral(k)
    return 0.5 * float(n) ** r * sigma_y * total


def gaussian_averaged_modulus(delta, eps):
    """
    Integral over the standard planar Gaussian of the oscillation of
    g(x, y) = |y| 1{|x| < delta} on sup-norm balls of radius eps.

    On the box around (x, y) the sup is (|y| + eps) when |x| < delta + eps and
    the inf is max(|y| - eps, 0) when |x| < delta - eps, so the integral splits
    into one-dimensional Gaussian factors.
    """
    if not delta > 0 or eps < 0:
        raise ContractError("need delta > 0 and eps >= 0")
    if eps == 0:
        return 0.0
    root2 = math.sqrt(2.0)
    upper = (math.sqrt(2.0 / math.pi) + eps) * special.erf((delta + eps) / root2)
    shifted = 2.0 * (math.exp(-0.5 * eps * eps) / math.sqrt(2.0 * math.pi) - eps * special.ndtr(-eps))
    lower = shifted * special.erf(max(delta - eps, 0.0) / root2)
    return float(upper - lower)

