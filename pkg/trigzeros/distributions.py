"""
Coefficient laws for random trigonometric polynomials.

Every law is an immutable dataclass exposing an exact characteristic function,
exact moments and an inverse-CDF or closed-form sampler.  The module-level
functions (``sample``, ``char_fn``, ``moments``, ``standardize``) are the
public entry points; the builtin constructors cover the discrete families used
throughout the package (square roots of primes, prime-angle cosines,
square-root Poisson, Rademacher, blocked Bernoulli-cosine sums).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats
from sympy import isprime

from .errors import (CompositePeriodError, ContractError, DegenerateLawError,
                     InsufficientTruncationError, UnsupportedOrderError)

logger = logging.getLogger(__name__)

MAX_ORDER = 12
DEFAULT_ORDER = 6
MERGE_TOL = 1e-12
MAX_ENUMERATED_PERIOD = 20
_CHUNK = 1 << 20


def _readonly(values):
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


def cumulants_from_moments(raw):
    """
    Convert raw moments m_1..m_s into cumulants k_1..k_s.

    Uses k_n = m_n - sum_{k=1}^{n-1} C(n-1, k-1) k_k m_{n-k} with m_0 = 1.
    """
    m = [1.0] + [float(v) for v in raw]
    kappa = [0.0]
    for n in range(1, len(m)):
        value = m[n]
        for k in range(1, n):
            value -= math.comb(n - 1, k - 1) * kappa[k] * m[n - k]
        kappa.append(value)
    return tuple(kappa[1:])


def moments_from_cumulants(kappa):
    """Inverse of :func:`cumulants_from_moments`."""
    k = [0.0] + [float(v) for v in kappa]
    m = [1.0]
    for n in range(1, len(k)):
        m.append(sum(math.comb(n - 1, j - 1) * k[j] * m[n - j] for j in range(1, n + 1)))
    return tuple(m[1:])


@dataclass(frozen=True)
class MomentSummary:
    """Raw moments, absolute moments and cumulants up to ``order``."""

    order: int
    mean: float
    variance: float
    raw: tuple
    absolute: tuple
    cumulants: tuple

    def cumulant(self, k):
        return self.cumulants[k - 1]


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)) or self.variance < 0:
            raise ContractError(f"Gaussian needs finite mean and variance >= 0, got {self}")

    def char_fn(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.mean * t - 0.5 * self.variance * t * t)

    def sample(self, rng, count):
        return rng.normal(self.mean, math.sqrt(self.variance), count)

    def mean_variance(self):
        return self.mean, self.variance

    def raw_moments(self, order):
        return moments_from_cumulants([self.mean, self.variance] + [0.0] * (order - 2))

    def absolute_moments(self, order):
        sigma = math.sqrt(self.variance)
        if sigma == 0.0:
            return tuple(abs(self.mean) ** k for k in range(1, order + 1))
        z = -self.mean ** 2 / (2.0 * self.variance)
        return tuple(
            float(sigma ** k * 2.0 ** (k / 2) * special.gamma((k + 1) / 2) / math.sqrt(math.pi)
                  * special.hyp1f1(-k / 2, 0.5, z))
            for k in range(1, order + 1))


@dataclass(frozen=True)
class UniformInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ContractError(f"UniformInterval needs lo < hi, got [{self.lo}, {self.hi}]")

    def char_fn(self, t):
        t = np.asarray(t, dtype=float)
        half_width = 0.5 * (self.hi - self.lo)
        # np.sinc(x) = sin(pi x) / (pi x)
        return np.exp(0.5j * (self.lo + self.hi) * t) * np.sinc(half_width * t / np.pi)

    def sample(self, rng, count):
        return rng.uniform(self.lo, self.hi, count)

    def mean_variance(self):
        return 0.5 * (self.lo + self.hi), (self.hi - self.lo) ** 2 / 12.0

    def raw_moments(self, order):
        width = self.hi - self.lo
        return tuple((self.hi ** (k + 1) - self.lo ** (k + 1)) / ((k + 1) * width)
                     for k in range(1, order + 1))

    def absolute_moments(self, order):
        width = self.hi - self.lo

        def antiderivative(x, k):
            return math.copysign(abs(x) ** (k + 1) / (k + 1), x)

        return tuple((antiderivative(self.hi, k) - antiderivative(self.lo, k)) / width
                     for k in range(1, order + 1))


@dataclass(frozen=True, eq=False)
class DiscreteAtoms:
    """
    Finitely supported law.

    Atoms are sorted on construction and atoms closer than ``MERGE_TOL``
    (relative to max(1, |atom|)) are merged with summed weights.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.size == 0 or atoms.shape != weights.shape:
            raise ContractError("atoms and weights must be nonempty and of equal length")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise ContractError("atoms and weights must be finite")
        if np.any(weights <= 0):
            raise ContractError("weights must be strictly positive")
        total = math.fsum(weights)
        if abs(total - 1.0) > 1e-12:
            raise ContractError(f"weights must sum to 1 within 1e-12, got {total!r}")

        order = np.argsort(atoms, kind='stable')
        atoms, weights = atoms[order], weights[order]
        gaps = np.diff(atoms) > MERGE_TOL * np.maximum(1.0, np.abs(atoms[1:]))
        starts = np.concatenate(([0], np.flatnonzero(gaps) + 1))
        object.__setattr__(self, 'atoms', _readonly(atoms[starts]))
        object.__setattr__(self, 'weights', _readonly(np.add.reduceat(weights, starts)))

    def __repr__(self):
        return f"DiscreteAtoms(atoms={self.atoms.tolist()}, weights={self.weights.tolist()})"

    def char_fn(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.empty(flat.shape, dtype=complex)
        step = max(1, _CHUNK // self.atoms.size)
        for start in range(0, flat.size, step):
            block = flat[start:start + step]
            out[start:start + step] = np.exp(1j * np.multiply.outer(block, self.atoms)) @ self.weights
        return out.reshape(t.shape)

    def sample(self, rng, count):
        cumulative = np.cumsum(self.weights)
        index = np.searchsorted(cumulative, rng.random(count), side='right')
        return self.atoms[np.minimum(index, self.atoms.size - 1)]

    def mean_variance(self):
        mean = float(self.weights @ self.atoms)
        return mean, float(self.weights @ (self.atoms - mean) ** 2)

    def raw_moments(self, order):
        return tuple(float(self.weights @ self.atoms ** k) for k in range(1, order + 1))

    def absolute_moments(self, order):
        magnitudes = np.abs(self.atoms)
        return tuple(float(self.weights @ magnitudes ** k) for k in range(1, order + 1))

    def resolve(self):
        return self


@dataclass(frozen=True)
class BlockedCosine:
    """Law of sum_{l=1}^{p} eps_l cos(2 pi l / p) with independent Rademacher signs."""

    period: int

    def __post_init__(self):
        if int(self.period) != self.period or self.period < 3:
            raise ContractError(f"BlockedCosine period must be an integer >= 3, got {self.period}")

    @property
    def coefficients(self):
        ell = np.arange(1, self.period + 1)
        return np.cos(2.0 * np.pi * ell / self.period)

    def char_fn(self, t):
        t = np.asarray(t, dtype=float)
        return np.prod(np.cos(np.multiply.outer(t, self.coefficients)), axis=-1).astype(complex)

    def sample(self, rng, count):
        signs = 2.0 * rng.integers(0, 2, size=(count, self.period)) - 1.0
        return signs @ self.coefficients

    def to_atoms(self):
        """Enumerate all 2^p sign patterns into a merged DiscreteAtoms law."""
        if self.period > MAX_ENUMERATED_PERIOD:
            raise UnsupportedOrderError(
                f"period {self.period} too large to enumerate (max {MAX_ENUMERATED_PERIOD})")
        patterns = np.arange(1 << self.period)[:, None] >> np.arange(self.period) & 1
        values = (2.0 * patterns - 1.0) @ self.coefficients
        return DiscreteAtoms(values, np.full(values.size, 0.5 ** self.period))

    def mean_variance(self):
        return 0.0, float(np.sum(self.coefficients ** 2))

    def raw_moments(self, order):
        sign_cumulants = cumulants_from_moments([float(k % 2 == 0) for k in range(1, order + 1)])
        coefficients = self.coefficients
        kappa = [sign_cumulants[j - 1] * float(np.sum(coefficients ** j)) for j in range(1, order + 1)]
        return moments_from_cumulants(kappa)

    def absolute_moments(self, order):
        return self.to_atoms().absolute_moments(order)

    def resolve(self):
        return self.to_atoms()


@dataclass(frozen=True)
class Affine:
    """Law of (base - shift) * scale; nested wrappers are flattened."""

    base: object
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.scale) or self.scale == 0:
            raise ContractError("affine scale must be finite and nonzero")
        if isinstance(self.base, Affine):
            inner = self.base
            object.__setattr__(self, 'shift', inner.shift + self.shift / inner.scale)
            object.__setattr__(self, 'scale', inner.scale * self.scale)
            object.__setattr__(self, 'base', inner.base)

    def char_fn(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * self.shift * self.scale * t) * self.base.char_fn(self.scale * t)

    def sample(self, rng, count):
        return (self.base.sample(rng, count) - self.shift) * self.scale

    def mean_variance(self):
        mean, variance = self.base.mean_variance()
        return (mean - self.shift) * self.scale, variance * self.scale ** 2

    def resolve(self):
        """Equivalent law without the wrapper."""
        base, s, c = self.base, self.shift, self.scale
        if isinstance(base, Gaussian):
            return Gaussian((base.mean - s) * c, base.variance * c * c)
        if isinstance(base, UniformInterval):
            ends = sorted(((base.lo - s) * c, (base.hi - s) * c))
            return UniformInterval(*ends)
        atoms = base.resolve()
        return DiscreteAtoms((atoms.atoms - s) * c, atoms.weights)

    def raw_moments(self, order):
        return self.resolve().raw_moments(order)

    def absolute_moments(self, order):
        return self.resolve().absolute_moments(order)


LAW_TYPES = (Gaussian, UniformInterval, DiscreteAtoms, BlockedCosine, Affine)


def sample(law, rng_state, count):
    """
    Draw ``count`` i.i.d. values from ``law``.

    Parameters
    ----------
    law : CoefficientLaw
    rng_state : numpy.random.Generator
        Caller-owned stream, usually from :func:`trigzeros.utils.make_stream`.
    count : int

    Returns
    -------
    numpy.ndarray
    """
    if int(count) < 1:
        raise ContractError(f"count must be >= 1, got {count}")
    return np.asarray(law.sample(rng_state, int(count)), dtype=float)


def char_fn(law, t):
    """Exact characteristic function E[exp(itX)]; vectorized over t."""
    value = law.char_fn(t)
    return complex(value) if np.ndim(t) == 0 else value


def joint_char_fn(laws, ts):
    """
    Characteristic function of a vector of independent coordinates.

    ``ts`` has shape (..., d) with d = len(laws); the value is the product of
    the marginal characteristic functions.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.shape[-1] != len(laws):
        raise ContractError(f"expected last axis of length {len(laws)}, got {ts.shape}")
    value = np.ones(ts.shape[:-1], dtype=complex)
    for k, law in enumerate(laws):
        value = value * law.char_fn(ts[..., k])
    return value


def moments(law, order=DEFAULT_ORDER):
    """
    Exact moment summary of ``law`` up to ``order`` (2 <= order <= 12).

    Raises
    ------
    UnsupportedOrderError
        order outside [2, 12]
    """
    if int(order) != order or not 2 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"moment order must be an integer in [2, {MAX_ORDER}], got {order}")
    order = int(order)
    mean, variance = law.mean_variance()
    raw = tuple(float(v) for v in law.raw_moments(order))
    cumulants = list(cumulants_from_moments(raw))
    cumulants[0], cumulants[1] = mean, variance
    return MomentSummary(order=order, mean=mean, variance=variance, raw=raw,
                         absolute=tuple(float(v) for v in law.absolute_moments(order)),
                         cumulants=tuple(cumulants))


def is_standardized(law, tol=1e-10):
    mean, variance = law.mean_variance()
    return abs(mean) <= tol and abs(variance - 1.0) <= tol


def standardize(law):
    """
    Affine wrapper with mean 0 and variance 1.

    Already standardized laws are returned unchanged.  The modulus of the
    characteristic function is only rescaled in t, so weak Cramer membership
    is preserved.
    """
    mean, variance = law.mean_variance()
    if not variance > 0:
        raise DegenerateLawError(f"cannot standardize a law with variance {variance}")
    if abs(mean) <= 1e-15 and abs(variance - 1.0) <= 1e-15:
        return law
    return Affine(law, shift=mean, scale=1.0 / math.sqrt(variance))


def symmetrize(law):
    """Law of X - X' for an independent copy X'; its char fn is |phi_X|^2."""
    if isinstance(law, Gaussian):
        return Gaussian(0.0, 2.0 * law.variance)
    if isinstance(law, Affine) and isinstance(law.base, Gaussian):
        return symmetrize(law.resolve())
    if isinstance(law, UniformInterval) or (isinstance(law, Affine) and isinstance(law.base, UniformInterval)):
        raise ContractError("symmetrized uniform laws are triangular and not representable")
    atoms = law.resolve()
    return DiscreteAtoms(np.subtract.outer(atoms.atoms, atoms.atoms).ravel(),
                         np.multiply.outer(atoms.weights, atoms.weights).ravel())


def make_rademacher():
    return DiscreteAtoms([-1.0, 1.0], [0.5, 0.5])


def make_sqrt_primes():
    """Standardized uniform law on {1, sqrt 2, sqrt 3, sqrt 5, sqrt 7}."""
    return standardize(DiscreteAtoms(np.sqrt([1.0, 2.0, 3.0, 5.0, 7.0]), np.full(5, 0.2)))


def make_cos_atoms(p):
    """
    Uniform weights on cos(2 pi i / p), i = 1..p-1, duplicates merged.

    The result is not standardized.
    """
    if int(p) != p or p < 5 or not isprime(int(p)):
        raise CompositePeriodError(f"make_cos_atoms needs a prime p >= 5, got {p}")
    p = int(p)
    i = np.arange(1, p)
    return DiscreteAtoms(np.cos(2.0 * np.pi * i / p), np.full(p - 1, 1.0 / (p - 1)))


def _poisson_truncation(lam, tail=1e-12):
    k = int(math.ceil(lam))
    while stats.poisson.sf(k, lam) >= tail:
        k += 1
    return k


def make_sqrt_poisson(lam, K=None):
    """
    Standardized law of sqrt(N), N ~ Poisson(lam), truncated to N <= K.

    Parameters
    ----------
    lam : float
        Poisson rate, > 0.
    K : int, optional
        Truncation point.  Defaults to the smallest K leaving less than 1e-12 mass.

    Raises
    ------
    InsufficientTruncationError
        when the mass above K exceeds 1e-12
    """
    if not lam > 0:
        raise ContractError(f"Poisson rate must be positive, got {lam}")
    if K is None:
        K = _poisson_truncation(lam)
        logger.debug("sqrt-Poisson(%g) truncated at K=%d", lam, K)
    mass = float(stats.poisson.cdf(K, lam))
    if 1.0 - mass > 1e-12:
        raise InsufficientTruncationError(
            f"truncation K={K} leaves mass {1.0 - mass:.3e} > 1e-12 for lambda={lam}")
    k = np.arange(K + 1)
    weights = stats.poisson.pmf(k, lam) / mass
    keep = weights > 0
    weights = weights[keep] / math.fsum(weights[keep])
    return standardize(DiscreteAtoms(np.sqrt(k[keep]), weights))


def make_blocked_cosine(p):
    return BlockedCosine(int(p))


def make_random_atoms(p, spread=1.0, seed=0):
    """Standardized uniform law on p atoms drawn uniformly from [0, spread]."""
    from .utils import make_stream

    if int(p) < 2:
        raise DegenerateLawError(f"need at least 2 atoms, got {p}")
    rng = make_stream(seed, int(p))
    return standardize(DiscreteAtoms(rng.uniform(0.0, spread, int(p)), np.full(int(p), 1.0 / int(p))))


_BUILTINS = {
    'sqrt_primes': lambda params: make_sqrt_primes(),
    'rademacher': lambda params: make_rademacher(),
    'cos_atoms': lambda params: make_cos_atoms(params['p']),
    'sqrt_poisson': lambda params: make_sqrt_poisson(params.get('lam', params.get('lambda', 1.0)),
                                                     params.get('K')),
    'random_atoms': lambda params: make_random_atoms(params['p'], params.get('spread', 1.0),
                                                     params.get('seed', 0)),
}


def law_to_dict(law):
    """Structural JSON description ``{"kind": ..., "params": {...}}``."""
    if isinstance(law, Gaussian):
        return {'kind': 'gaussian', 'params': {'mean': law.mean, 'variance': law.variance}}
    if isinstance(law, UniformInterval):
        return {'kind': 'uniform', 'params': {'lo': law.lo, 'hi': law.hi}}
    if isinstance(law, DiscreteAtoms):
        return {'kind': 'atoms', 'params': {'atoms': law.atoms.tolist(), 'weights': law.weights.tolist()}}
    if isinstance(law, BlockedCosine):
        return {'kind': 'blocked_cosine', 'params': {'p': law.period}}
    if isinstance(law, Affine):
        return {'kind': 'affine', 'params': {'base': law_to_dict(law.base),
                                             'shift': law.shift, 'scale': law.scale}}
    raise ContractError(f"unknown law type {type(law).__name__}")


def law_from_dict(spec):
    """
    Build a law from its JSON description or a builtin name.

    A truthy top-level ``"standardize"`` key wraps the result in
    :func:`standardize`.
    """
    if isinstance(spec, str):
        spec = {'kind': spec}
    kind = spec.get('kind')
    params = spec.get('params', {}) or {}
    try:
        law = _law_of_kind(kind, params)
    except KeyError as e:
        raise ContractError(f"law kind {kind!r} needs parameter {e.args[0]!r}") from e
    if spec.get('standardize'):
        law = standardize(law)
    return law


def _law_of_kind(kind, params):
    if kind == 'gaussian':
        law = Gaussian(float(params.get('mean', 0.0)), float(params.get('variance', 1.0)))
    elif kind == 'uniform':
        law = UniformInterval(float(params['lo']), float(params['hi']))
    elif kind == 'atoms':
        law = DiscreteAtoms(params['atoms'], params['weights'])
    elif kind == 'blocked_cosine':
        law = make_blocked_cosine(params['p'])
    elif kind == 'affine':
        law = Affine(law_from_dict(params['base']), float(params.get('shift', 0.0)),
                     float(params.get('scale', 1.0)))
    elif kind in _BUILTINS:
        law = _BUILTINS[kind](params)
    else:
        raise ContractError(f"unknown law kind {kind!r}")
    return law
