"""
Trigonometric polynomials P_n(t) = sum_k a_k cos(kt + theta_k) + b_k sin(kt + theta_k).

Three evaluation modes share one kernel:

    raw         P_n^{(d)}(t)
    normalized  u_n^{(d)}(t) = P_n^{(d)}(t) / sqrt(n)
    rescaled    U_n^{(d)}(t) = n^{-d} u_n^{(d)}(t / n)

The kernel reduces the argument modulo 2 pi, walks k = 1..n with a rotation
recurrence for exp(ikx) (re-anchored every ``_ANCHOR`` terms) and accumulates
with Neumaier compensated summation.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .distributions import is_standardized, sample
from .errors import ContractError

MODES = ('raw', 'normalized', 'rescaled')
MAX_DERIV = 3
TWO_PI = 2.0 * np.pi
_ANCHOR = 32


def _as_vector(values, n, name):
    values = np.array(values, dtype=float).ravel()
    if values.size != n:
        raise ContractError(f"{name} must have length {n}, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise ContractError(f"{name} must be finite")
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """One realization: coefficient vectors a, b and phases theta, all of length n."""

    a: np.ndarray
    b: np.ndarray
    theta: np.ndarray = None

    def __post_init__(self):
        n = np.size(self.a)
        if n < 1:
            raise ContractError("a trigonometric polynomial needs degree n >= 1")
        object.__setattr__(self, 'a', _as_vector(self.a, n, 'a'))
        object.__setattr__(self, 'b', _as_vector(self.b, n, 'b'))
        theta = np.zeros(n) if self.theta is None else self.theta
        object.__setattr__(self, 'theta', _as_vector(theta, n, 'theta'))

    @property
    def n(self):
        return self.a.size

    def __repr__(self):
        return f"TrigPolynomial(n={self.n})"


@dataclass(frozen=True)
class PhasePolicy:
    """How phases theta_k are chosen: zero, constant, uniform (seeded) or explicit."""

    kind: str = 'zero'
    value: float = 0.0
    seed: int = 0
    vector: tuple = ()

    def __post_init__(self):
        if self.kind not in ('zero', 'constant', 'uniform', 'explicit'):
            raise ContractError(f"unknown phase policy {self.kind!r}")

    @classmethod
    def constant(cls, value):
        return cls('constant', value=float(value))

    @classmethod
    def uniform(cls, seed):
        return cls('uniform', seed=int(seed))

    @classmethod
    def explicit(cls, vector):
        return cls('explicit', vector=tuple(float(v) for v in vector))

    def phases(self, n):
        if self.kind == 'zero':
            return np.zeros(n)
        if self.kind == 'constant':
            return np.full(n, self.value)
        if self.kind == 'uniform':
            from .utils import make_stream
            return make_stream(self.seed, n).uniform(0.0, TWO_PI, n)
        if len(self.vector) != n:
            raise ContractError(f"explicit phase vector has length {len(self.vector)}, expected {n}")
        return np.array(self.vector)

    def to_dict(self):
        return {'kind': self.kind, 'value': self.value, 'seed': self.seed, 'vector': list(self.vector)}

    @classmethod
    def from_dict(cls, spec):
        if spec is None:
            return cls()
        if isinstance(spec, str):
            return cls(spec)
        return cls(spec.get('kind', 'zero'), float(spec.get('value', 0.0)), int(spec.get('seed', 0)),
                   tuple(float(v) for v in spec.get('vector', ())))


def _check(deriv, mode):
    if mode not in MODES:
        raise ContractError(f"mode must be one of {MODES}, got {mode!r}")
    if int(deriv) != deriv or not 0 <= deriv <= MAX_DERIV:
        raise ContractError(f"derivative order must be in 0..{MAX_DERIV}, got {deriv}")


def evaluate_many(poly, t, derivs, mode):
    """
    Evaluate several derivative orders at once.

    Returns an array of shape ``(len(derivs),) + shape(t)``.
    """
    for d in derivs:
        _check(d, mode)
    t = np.asarray(t, dtype=float)
    n = poly.n
    x = t / n if mode == 'rescaled' else t
    x = np.mod(x, TWO_PI).ravel()

    cos_theta, sin_theta = np.cos(poly.theta), np.sin(poly.theta)
    step = np.exp(1j * x)
    rotation = None
    total = np.zeros((len(derivs), x.size))
    carry = np.zeros_like(total)

    for k in range(1, n + 1):
        if (k - 1) % _ANCHOR == 0:
            rotation = np.exp(1j * np.mod(k * x, TWO_PI))
        else:
            rotation = rotation * step
        c = rotation.real * cos_theta[k - 1] - rotation.imag * sin_theta[k - 1]
        s = rotation.imag * cos_theta[k - 1] + rotation.real * sin_theta[k - 1]
        ak, bk = poly.a[k - 1], poly.b[k - 1]
        weight = k / n if mode == 'rescaled' else float(k)
        for row, d in enumerate(derivs):
            # d-th derivative of a cos u + b sin u cycles with period 4
            if d % 4 == 0:
                term = ak * c + bk * s
            elif d % 4 == 1:
                term = bk * c - ak * s
            elif d % 4 == 2:
                term = -(ak * c + bk * s)
            else:
                term = ak * s - bk * c
            if d:
                term = term * weight ** d
            running = total[row] + term
            carry[row] += np.where(np.abs(total[row]) >= np.abs(term),
                                   (total[row] - running) + term,
                                   (term - running) + total[row])
            total[row] = running

    values = total + carry
    if mode != 'raw':
        values /= math.sqrt(n)
    return values.reshape((len(derivs),) + t.shape)


def eval(poly, t, deriv=0, mode='raw'):
    """
    Value of the deriv-th derivative of the polynomial at t in the given mode.

    Parameters
    ----------
    poly : TrigPolynomial
    t : float or array_like
    deriv : int
        0..3
    mode : {'raw', 'normalized', 'rescaled'}
    """
    value = evaluate_many(poly, np.atleast_1d(t), (deriv,), mode)[0]
    return float(value[0]) if np.ndim(t) == 0 else value.reshape(np.shape(t))


def eval_grid(poly, interval, m, deriv=0, mode='raw'):
    """Values at m equispaced points of [lo, hi], endpoints included."""
    lo, hi = interval
    if m < 2 or not lo < hi:
        raise ContractError("eval_grid needs m >= 2 and lo < hi")
    return evaluate_many(poly, np.linspace(lo, hi, int(m)), (deriv,), mode)[0]


def sup_bound(poly, deriv=0, mode='raw'):
    """
    Deterministic bound sum_k (|a_k| + |b_k|) w_k^deriv on sup over R.

    w_k = k for raw and normalized modes, k/n for rescaled; normalized and
    rescaled carry the extra 1/sqrt(n).
    """
    _check(deriv, mode)
    k = np.arange(1, poly.n + 1, dtype=float)
    if mode == 'rescaled':
        k = k / poly.n
    bound = math.fsum((np.abs(poly.a) + np.abs(poly.b)) * k ** deriv)
    return bound if mode == 'raw' else bound / math.sqrt(poly.n)


def sup_grid(poly, interval, deriv=0, mode='raw', m=1 << 14):
    """Grid maximum of |f^(deriv)|, to set against :func:`sup_bound`."""
    return float(np.max(np.abs(eval_grid(poly, interval, m, deriv, mode))))


def sample_polynomial(law, n, phase=None, rng_state=None):
    """
    Draw a polynomial with 2n i.i.d. coefficients from a standardized law.

    The first n draws fill a, the next n fill b.

    Raises
    ------
    ContractError
        law not standardized, or n < 1
    """
    if int(n) < 1:
        raise ContractError(f"degree must be >= 1, got {n}")
    if not is_standardized(law):
        raise ContractError("coefficient law must be standardized (mean 0, variance 1); "
                            "wrap it with distributions.standardize")
    n = int(n)
    phase = phase or PhasePolicy()
    draws = sample(law, rng_state, 2 * n)
    return TrigPolynomial(draws[:n], draws[n:], phase.phases(n))


def poly_to_dict(poly):
    return {'n': poly.n, 'a': poly.a.tolist(), 'b': poly.b.tolist(), 'theta': poly.theta.tolist()}


def poly_from_dict(spec):
    poly = TrigPolynomial(spec['a'], spec['b'], spec.get('theta'))
    if 'n' in spec and int(spec['n']) != poly.n:
        raise ContractError(f"declared degree {spec['n']} does not match {poly.n} coefficients")
    return poly


def save_polynomial(poly, path):
    with open(path, 'w') as f:
        json.dump(poly_to_dict(poly), f, indent=2)


def load_polynomial(path):
    with open(path, 'r') as f:
        return poly_from_dict(json.load(f))


@dataclass(frozen=True, eq=False)
class SummandFamily:
    """
    The vectors X_i = (a_i cos v_i + b_i sin v_i, (i/n)(b_i cos v_i - a_i sin v_i)),
    v_i = i t / n + theta_i, whose normalized sum is (U_n(t), U_n'(t)).

    Each X_i is the linear image M_i (a_i, b_i) of the coefficient pair.
    """

    law: object
    n: int
    t: float = 1.0
    theta: np.ndarray = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise ContractError(f"family size must be >= 1, got {self.n}")
        theta = np.zeros(int(self.n)) if self.theta is None else self.theta
        object.__setattr__(self, 'theta', _as_vector(theta, int(self.n), 'theta'))

    @property
    def maps(self):
        """Array of shape (n, 2, 2) holding M_i."""
        i = np.arange(1, self.n + 1, dtype=float)
        angle = i * self.t / self.n + self.theta
        c, s, w = np.cos(angle), np.sin(angle), i / self.n
        return np.stack([np.stack([c, s], axis=-1), np.stack([-w * s, w * c], axis=-1)], axis=1)

    def char_fn(self, s):
        """Per-i characteristic functions at s; shape ``shape(s)[:-1] + (n,)``."""
        s = np.asarray(s, dtype=float)
        maps = self.maps
        u1 = np.multiply.outer(s[..., 0], maps[:, 0, 0]) + np.multiply.outer(s[..., 1], maps[:, 1, 0])
        u2 = np.multiply.outer(s[..., 0], maps[:, 0, 1]) + np.multiply.outer(s[..., 1], maps[:, 1, 1])
        return self.law.char_fn(u1) * self.law.char_fn(u2)

    def mean_covariance(self):
        _, variance = self.law.mean_variance()
        maps = self.maps
        return variance * np.einsum('ijk,ilk->jl', maps, maps) / self.n
