"""
Closed-form Gaussian oracles.

For i.i.d. standard Gaussian coefficients the normalized polynomial u_n is a
stationary Gaussian process with spectral moments lambda0 = n and
lambda2 = sum k^2, so the Kac-Rice density of zeros is sqrt(lambda2/lambda0)/pi
per unit length.  In the rescaled picture (U_n(t), U_n'(t)) is centered
Gaussian with covariance diag(1, sigma_n^2), sigma_n^2 = (n+1)(2n+1)/(6n^2).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ContractError

KAC_LIMIT = 1.0 / (math.pi * math.sqrt(3.0))


@dataclass(frozen=True)
class SpectralMoments:
    n: int
    lambda0: float
    lambda2: float
    sigma2: float

    @classmethod
    def of(cls, n):
        if int(n) < 1:
            raise ContractError(f"n must be >= 1, got {n}")
        n = int(n)
        lambda2 = n * (n + 1) * (2 * n + 1) / 6.0
        return cls(n=n, lambda0=float(n), lambda2=lambda2, sigma2=(n + 1) * (2 * n + 1) / (6.0 * n * n))


def covariance_matrix(n, t=0.0):
    """diag(1, sigma_n^2); the process is stationary so t is ignored."""
    return np.diag([1.0, SpectralMoments.of(n).sigma2])


def exact_expected_zeros(n, interval=(0.0, 2.0 * math.pi)):
    """((b - a) / pi) * sqrt((n+1)(2n+1)/6) for u_n on the unscaled interval [a, b]."""
    a, b = interval
    moments = SpectralMoments.of(n)
    return (b - a) / math.pi * math.sqrt(moments.lambda2 / moments.lambda0)


def gaussian_kac_functional(n, r, delta=None):
    """
    (n^r / 2) E[|Y| 1{|X| < delta}] for (X, Y) ~ N(0, diag(1, sigma_n^2)), delta = n^-r.

    Equals sigma_n sqrt(2/pi) (n^r / 2) erf(delta / sqrt 2) and tends to
    1 / (pi sqrt 3).  Passing ``delta`` explicitly drops the n^r / 2 prefactor
    and returns E[|Y| 1{|X| < delta}] itself.
    """
    if not r > 0:
        raise ContractError(f"r must be positive, got {r}")
    sigma = math.sqrt(SpectralMoments.of(n).sigma2)
    if delta is not None:
        return sigma * math.sqrt(2.0 / math.pi) * float(special.erf(delta / math.sqrt(2.0)))
    delta = float(n) ** (-r)
    return sigma * math.sqrt(2.0 / math.pi) * 0.5 * float(n) ** r * float(special.erf(delta / math.sqrt(2.0)))


def gaussian_small_ball(sigma, delta):
    """
    P(X^2 + Y^2 <= delta^2) for independent X ~ N(0, 1), Y ~ N(0, sigma^2).

    Integrates phi(x) erf(sqrt(delta^2 - x^2) / (sigma sqrt 2)) over |x| <= delta
    after x = delta sin u, which removes the square-root endpoint singularity.
    """
    if not (sigma > 0 and delta > 0):
        raise ContractError("sigma and delta must be positive")

    def integrand(u):
        x = delta * math.sin(u)
        return (math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
                * special.erf(delta * math.cos(u) / (sigma * math.sqrt(2.0))) * delta * math.cos(u))

    value, _ = integrate.quad(integrand, -0.5 * math.pi, 0.5 * math.pi, epsabs=0.0, epsrel=1e-12, limit=200)
    return min(1.0, value)
