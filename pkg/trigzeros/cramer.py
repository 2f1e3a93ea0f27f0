"""
Empirical probes of weak Cramer conditions.

A law satisfies the weak Cramer condition with exponent b when
|phi(t)| <= 1 - C / |t|^b for |t| >= R.  These probes scan |phi| on
[R, T_max] only: a pass is evidence on the scanned range, never a proof of
membership.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateLawError, FlatEnvelopeError, InsufficientDataError
from .trigpoly import SummandFamily

logger = logging.getLogger(__name__)

GRID_PER_WINDOW = 64
REFINE_ITERS = 40
DEFAULT_T_MAX = 1e4
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class EnvelopeTable:
    """Per-window refined sup of |phi| over windows tiling [R, T_max]."""

    centers: np.ndarray
    half_width: float
    sup_abs_phi: np.ndarray
    argmax_t: np.ndarray
    R: float
    T_max: float

    def rows(self):
        return zip(self.centers.tolist(), self.sup_abs_phi.tolist(), self.argmax_t.tolist())


@dataclass(frozen=True)
class CramerCertificate:
    b: float
    C: float
    R: float
    T_max: float
    verdict: str
    worst_t: float
    worst_margin: float

    def to_dict(self):
        return {'b': self.b, 'C': self.C, 'R': self.R, 'T_max': self.T_max, 'verdict': self.verdict,
                'worst_t': self.worst_t, 'worst_margin': self.worst_margin}


def _golden_max(fun, lo, hi, iters):
    """Vectorized golden-section maximization of fun on [lo, hi]."""
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    x1 = hi - _INV_GOLDEN * (hi - lo)
    x2 = lo + _INV_GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        keep_left = f1 >= f2
        hi = np.where(keep_left, x2, hi)
        lo = np.where(keep_left, lo, x1)
        new_x = np.where(keep_left, hi - _INV_GOLDEN * (hi - lo), lo + _INV_GOLDEN * (hi - lo))
        new_f = fun(new_x)
        x1, x2, f1, f2 = (np.where(keep_left, new_x, x2), np.where(keep_left, x1, new_x),
                          np.where(keep_left, new_f, f2), np.where(keep_left, f1, new_f))
    best = f1 >= f2
    return np.where(best, x1, x2), np.where(best, f1, f2)


def envelope(law, R, T_max, window=1.0, refine_iters=REFINE_ITERS):
    """
    Refined per-window sup of |phi| over windows of width ``window`` tiling [R, T_max].

    Each window is sampled with step (width / 64); the grid argmax is then
    polished by golden-section search on the two neighbouring cells.

    Parameters
    ----------
    law : CoefficientLaw
    R, T_max : float
        0 < R < T_max
    window : float
    refine_iters : int

    Returns
    -------
    EnvelopeTable
    """
    if not 0 < R < T_max or not window > 0:
        raise ContractError("envelope needs 0 < R < T_max and window > 0")
    left = np.arange(R, T_max, window)
    right = np.minimum(left + window, T_max)
    fractions = np.linspace(0.0, 1.0, GRID_PER_WINDOW + 1)
    points = left[:, None] + (right - left)[:, None] * fractions[None, :]
    values = np.abs(law.char_fn(points))

    rows = np.arange(left.size)
    best = np.argmax(values, axis=1)
    grid_t, grid_sup = points[rows, best], values[rows, best]
    step = (right - left) / GRID_PER_WINDOW
    t_ref, sup_ref = _golden_max(lambda t: np.abs(law.char_fn(t)),
                                 np.maximum(left, grid_t - step), np.minimum(right, grid_t + step),
                                 refine_iters)
    refined = sup_ref > grid_sup
    return EnvelopeTable(centers=0.5 * (left + right), half_width=0.5 * window,
                         sup_abs_phi=np.minimum(np.where(refined, sup_ref, grid_sup), 1.0),
                         argmax_t=np.where(refined, t_ref, grid_t), R=float(R), T_max=float(T_max))


def probe_weak_cramer(law, b, C, R, T_max=DEFAULT_T_MAX, window=1.0, table=None):
    """
    Check |phi(t)| <= 1 - C / |t|^b on the refined envelope over [R, T_max].

    The margin of a window is (1 - sup|phi|) * t*^b - C at its argmax t*; the
    verdict is "pass" when the smallest margin is nonnegative.  A pass only
    covers the scanned range.
    """
    if not (b > 0 and C > 0):
        raise ContractError("b and C must be positive")
    if table is None:
        table = envelope(law, R, T_max, window)
    margins = (1.0 - table.sup_abs_phi) * np.abs(table.argmax_t) ** b - C
    worst = int(np.argmin(margins))
    verdict = 'pass' if margins[worst] >= 0 else 'fail'
    logger.info("weak Cramer probe b=%g C=%g on [%g, %g]: %s (worst t=%.6g)",
                b, C, R, T_max, verdict, table.argmax_t[worst])
    return CramerCertificate(b=float(b), C=float(C), R=float(R), T_max=float(T_max), verdict=verdict,
                             worst_t=float(table.argmax_t[worst]), worst_margin=float(margins[worst]))


def fit_cramer_exponent(table):
    """
    Least-squares fit of log(1 - sup|phi|) = log C - b log t over window argmaxima.

    Returns
    -------
    (b_hat, C_hat, residual)
        residual is the RMS of the log-scale fit

    Raises
    ------
    InsufficientDataError
        fewer than 8 windows with sup|phi| < 1
    FlatEnvelopeError
        all usable sups equal
    """
    usable = table.sup_abs_phi < 1.0
    if usable.sum() < 8:
        raise InsufficientDataError(f"need at least 8 windows with sup|phi| < 1, got {int(usable.sum())}")
    y = np.log1p(-table.sup_abs_phi[usable])
    x = np.log(np.abs(table.argmax_t[usable]))
    if np.all(y == y[0]):
        raise FlatEnvelopeError("envelope is flat; no exponent can be fitted")
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(-slope), float(math.exp(intercept)), residual


def _atoms_of(law):
    try:
        atoms = law.resolve()
    except AttributeError:
        raise ContractError(f"{type(law).__name__} is not a discrete law") from None
    if not hasattr(atoms, 'atoms'):
        raise ContractError(f"{type(law).__name__} is not a discrete law")
    return atoms


def lattice_distance_lower_bound(law, t):
    """
    (c_min^2 / pi^2) * sum_{j >= 2} dist^2(t (U_1 - U_j), 2 pi Z).

    c_min is the smallest weight and U_1 the smallest atom.  This bound never
    exceeds 1 - |phi(t)|.
    """
    atoms = _atoms_of(law)
    if atoms.atoms.size < 2:
        raise DegenerateLawError("the lattice bound needs at least 2 atoms")
    t = np.asarray(t, dtype=float)
    phase = np.multiply.outer(t, atoms.atoms[0] - atoms.atoms[1:])
    distance = np.abs(phase - 2.0 * np.pi * np.round(phase / (2.0 * np.pi)))
    bound = atoms.weights.min() ** 2 / np.pi ** 2 * np.sum(distance ** 2, axis=-1)
    return float(bound) if np.ndim(t) == 0 else bound


def symmetrized_identity_gap(law, t):
    """1 - |phi(t)|^2 minus sum_{i<j} 2 c_i c_j (1 - cos(t (U_i - U_j))); zero up to rounding."""
    atoms = _atoms_of(law)
    t = np.asarray(t, dtype=float)
    diffs = np.subtract.outer(atoms.atoms, atoms.atoms)
    upper = np.triu_indices(atoms.atoms.size, k=1)
    pair_weights = 2.0 * np.multiply.outer(atoms.weights, atoms.weights)[upper]
    half_angle = 0.5 * np.multiply.outer(t, diffs[upper])
    rhs = np.sum(pair_weights * 2.0 * np.sin(half_angle) ** 2, axis=-1)
    gap = 1.0 - np.abs(atoms.char_fn(t)) ** 2 - rhs
    return float(gap) if np.ndim(t) == 0 else gap


def mean_envelope(laws, t):
    """
    (1/n) sum_i |phi_i(t)|.

    ``laws`` is a law, a list of laws (t real) or a :class:`SummandFamily`
    (t a 2-vector, or an array of them on the last axis).
    """
    if isinstance(laws, SummandFamily):
        values = np.mean(np.abs(laws.char_fn(t)), axis=-1)
        return float(values) if np.ndim(values) == 0 else values
    if not isinstance(laws, (list, tuple)):
        laws = [laws]
    if not laws:
        raise ContractError("mean_envelope needs a nonempty list of laws")
    t = np.asarray(t, dtype=float)
    values = sum(np.abs(law.char_fn(t)) for law in laws) / len(laws)
    return float(values) if np.ndim(t) == 0 else values


def local_cramer_sup(laws, r, R, grid=2000):
    """
    Sup of the mean envelope over the annulus r <= |t| <= R.

    One-dimensional families are scanned on ``grid`` points of [r, R] and the
    best point is golden-section refined.  A :class:`SummandFamily` is scanned
    on a polar grid of radii in [r, R] and angles in [0, pi], which covers the
    annulus because |phi(-s)| = |phi(s)|.
    """
    if not 0 < r < R:
        raise ContractError("local_cramer_sup needs 0 < r < R")
    if isinstance(laws, SummandFamily):
        radii = np.linspace(r, R, grid)
        angles = np.linspace(0.0, np.pi, grid)
        best = 0.0
        for radius in radii:
            s = radius * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
            best = max(best, float(np.max(mean_envelope(laws, s))))
        return best

    ts = np.linspace(r, R, grid)
    values = mean_envelope(laws, ts)
    j = int(np.argmax(values))
    _, refined = _golden_max(lambda t: mean_envelope(laws, t), ts[max(j - 1, 0)], ts[min(j + 1, grid - 1)],
                             REFINE_ITERS)
    return float(max(values[j], refined))
