"""
Monte Carlo small-ball probabilities for (U_n(t), U_n'(t)).

Trials are grouped into fixed blocks of ``BLOCK`` trials and block b draws
from the stream keyed by (seed, n, b), so hit counts do not depend on the
number of worker processes.
"""

import logging
import math
import multiprocessing as mp
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import is_standardized, sample
from .errors import ContractError, InsufficientDataError
from .utils import make_stream

logger = logging.getLogger(__name__)

BLOCK = 4096
MIN_TRIALS = 10_000


@dataclass(frozen=True)
class SmallBallEstimate:
    law_id: str
    n: int
    t: float
    gamma: float
    trials: int
    hits: int

    @property
    def estimate(self):
        return self.hits / self.trials

    @property
    def se(self):
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.trials)

    @property
    def radius(self):
        return float(self.n) ** (-self.gamma)

    @property
    def upper95(self):
        """Rule of three for zero hits, otherwise the normal upper 95% bound."""
        if self.hits == 0:
            return 3.0 / self.trials
        return min(1.0, self.estimate + 1.96 * self.se)

    def to_dict(self):
        return {'law_id': self.law_id, 'n': self.n, 't': self.t, 'gamma': self.gamma,
                'trials': self.trials, 'hits': self.hits, 'estimate': self.estimate,
                'se': self.se, 'radius': self.radius, 'upper95': self.upper95}


def _blocks(trials):
    sizes = [BLOCK] * (trials // BLOCK)
    if trials % BLOCK:
        sizes.append(trials % BLOCK)
    return sizes


def _vector_block_hits(args):
    law, n, t, theta, radius, seed, index, size = args
    rng = make_stream(seed, n, index)
    draws = sample(law, rng, 2 * n * size).reshape(size, 2 * n)
    a, b = draws[:, :n], draws[:, n:]
    i = np.arange(1, n + 1, dtype=float)
    angle = i * t / n + theta
    c, s, w = np.cos(angle), np.sin(angle), i / n
    value = (a @ c + b @ s) / math.sqrt(n)
    slope = (b @ (w * c) - a @ (w * s)) / math.sqrt(n)
    return int(np.count_nonzero(value * value + slope * slope <= radius * radius))


def _scalar_block_hits(args):
    law, weights, radius, seed, index, size = args
    n = weights.size
    rng = make_stream(seed, n, index)
    total = sample(law, rng, n * size).reshape(size, n) @ weights / math.sqrt(n)
    return int(np.count_nonzero(np.abs(total) <= radius))


def _run_blocks(worker, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with mp.Pool(workers) as pool:
            return sum(pool.map(worker, jobs))
    return sum(worker(job) for job in jobs)


def small_ball_mc(law, n, t=1.0, gamma=0.6, trials=MIN_TRIALS, seed=0, workers=1, theta=None,
                  law_id='law', b=None):
    """
    Fraction of trials with |(U_n(t), U_n'(t))|_2 <= n^-gamma.

    Parameters
    ----------
    law : CoefficientLaw
        standardized coefficient law
    n : int
    t : float
        evaluation point of the rescaled polynomial (1.0 is non-resonant)
    gamma : float
    trials : int
        at least 10^4
    seed : int
    workers : int
    theta : array_like, optional
        phases, zero by default
    law_id : str
    b : float, optional
        fitted Cramer exponent; gamma outside (0, 1/b + 1/2) only logs a warning

    Returns
    -------
    SmallBallEstimate
    """
    if int(trials) < MIN_TRIALS:
        raise ContractError(f"small_ball_mc needs at least {MIN_TRIALS} trials, got {trials}")
    if not is_standardized(law):
        raise ContractError("coefficient law must be standardized")
    if b is not None and not 0 < gamma < 1.0 / b + 0.5:
        logger.warning("gamma=%g lies outside (0, 1/b + 1/2) = (0, %g)", gamma, 1.0 / b + 0.5)
    n, trials = int(n), int(trials)
    theta = np.zeros(n) if theta is None else np.asarray(theta, dtype=float)
    radius = float(n) ** (-gamma)
    jobs = [(law, n, float(t), theta, radius, seed, index, size)
            for index, size in enumerate(_blocks(trials))]
    hits = _run_blocks(_vector_block_hits, jobs, workers)
    logger.info("small ball n=%d gamma=%g: %d / %d hits", n, gamma, hits, trials)
    return SmallBallEstimate(law_id=law_id, n=n, t=float(t), gamma=float(gamma), trials=trials, hits=hits)


def weighted_sum_small_ball_mc(law, weights, gamma, trials=MIN_TRIALS, seed=0, workers=1, law_id='law'):
    """
    One-dimensional frequency of |sum_k w_k X_k| / sqrt(n) <= n^-gamma, n = len(weights).

    With Rademacher X_k and w_k = cos(2 pi k / p) this is the blocked cosine sum.
    """
    weights = np.asarray(weights, dtype=float)
    n, trials = weights.size, int(trials)
    if n < 1 or trials < 1:
        raise ContractError("need at least one weight and one trial")
    radius = float(n) ** (-gamma)
    jobs = [(law, weights, radius, seed, index, size) for index, size in enumerate(_blocks(trials))]
    hits = _run_blocks(_scalar_block_hits, jobs, workers)
    return SmallBallEstimate(law_id=law_id, n=n, t=float('nan'), gamma=float(gamma), trials=trials, hits=hits)


def blocked_cosine_weights(p, n):
    k = np.arange(1, int(n) + 1)
    return np.cos(2.0 * np.pi * k / p)


def lattice_atom_probability(n):
    """P(X_1 + ... + X_n = 0) for Rademacher X_i: C(n, n/2) / 2^n, zero for odd n."""
    n = int(n)
    if n % 2:
        return 0.0
    return float(stats.binom.pmf(n // 2, n, 0.5))


def fit_decay_exponent(estimates):
    """
    Least-squares slope of log(estimate) against log(n).

    Zero-hit entries are dropped with a warning.

    Returns
    -------
    (slope, intercept, residual)

    Raises
    ------
    InsufficientDataError
        fewer than 3 usable estimates at distinct n
    """
    usable = []
    for estimate in estimates:
        if estimate.hits == 0:
            logger.warning("excluding zero-hit estimate at n=%d (upper bound %.3g)",
                           estimate.n, estimate.upper95)
            continue
        usable.append(estimate)
    if len({e.n for e in usable}) < 3:
        raise InsufficientDataError("need estimates at 3 or more distinct n with nonzero hits")
    x = np.log([e.n for e in usable])
    y = np.log([e.estimate for e in usable])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), residual
