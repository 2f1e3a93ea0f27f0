"""
Real-zero counting for trigonometric polynomials.

Two independent counters are provided:

* ``count_sign_changes`` scans an adaptively refined grid.  Every cell is
  either certified zero-free (same sign at both ends, and a rigorous lower
  bound on |f| inside or f strictly monotone) or certified to hold exactly
  one simple zero (sign change and f' certified zero-free).
* ``kac_rice_count`` counts the connected components of {|f| < delta}.  When
  delta < min(inf(|f| + |f'|), |f(a)|, |f(b)|) every component is crossed
  monotonically from -delta to +delta (or back) and holds exactly one zero,
  so (1 / 2 delta) * integral of |f'| 1{|f| < delta} is an integer.

Cell certificates use the coefficient bounds of :func:`trigpoly.sup_bound`:
a first-order test ``min(|g_l|, |g_r|) > h sup|g'|`` and a second-order test
expanding from each end to the midpoint with remainder sup|g''| (h/2)^2 / 2.
A cell passes if either test does; failing cells are bisected.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from . import trigpoly
from .errors import ContractError

logger = logging.getLogger(__name__)

ENDPOINT_TOL = 1e-14
NUDGE = 1e-9
ROOT_TOL = 1e-12
MAX_ROUNDS = 48
MAX_REFINE_ROUNDS = 12
REFINE_BUDGET = 64
DEFAULT_R = 1.3


@dataclass(frozen=True)
class ZeroCount:
    count: int
    method: str
    certified: bool
    roots: tuple = None
    interval: tuple = None
    nudged: bool = False
    flags: tuple = ()

    def to_dict(self):
        return {'count': self.count, 'method': self.method, 'certified': self.certified,
                'roots': None if self.roots is None else list(self.roots),
                'interval': None if self.interval is None else list(self.interval),
                'nudged': self.nudged, 'flags': list(self.flags)}


@dataclass(frozen=True)
class ThresholdReport:
    """Certified lower bound on inf(|f| + |f'|) over an interval, with boundary values."""

    omega_lower: float
    f_at_a: float
    f_at_b: float
    delta_max: float
    grid_step: float
    sup_bound: float
    grid_min: float = field(default=math.inf)

    def to_dict(self):
        return {'omega_lower': self.omega_lower, 'f_at_a': self.f_at_a, 'f_at_b': self.f_at_b,
                'delta_max': self.delta_max, 'grid_step': self.grid_step,
                'sup_bound': self.sup_bound, 'grid_min': self.grid_min}


def default_grid(n, interval, mode):
    """32 grid points per period of the highest harmonic, at least 64."""
    lo, hi = interval
    length = hi - lo
    cycles = length / (2.0 * math.pi) if mode == 'rescaled' else n * length / (2.0 * math.pi)
    return max(64, int(math.ceil(32 * cycles)) + 1)


def default_delta(report, n, r=DEFAULT_R):
    """min(delta_max / 2, n^-r); zero when nothing could be certified."""
    return min(report.delta_max / 2.0, float(n) ** (-r))


def zero_budget(n, interval, mode):
    lo, hi = interval
    length = (hi - lo) / n if mode == 'rescaled' else hi - lo
    return int(math.floor((length / (2.0 * math.pi) + 1.0) * 2 * n))


def _nudge(poly, interval, mode):
    lo, hi = (float(v) for v in interval)
    if not lo < hi:
        raise ContractError(f"interval must satisfy lo < hi, got {interval}")
    nudged = False
    if abs(trigpoly.eval(poly, lo, 0, mode)) < ENDPOINT_TOL:
        lo, nudged = lo + NUDGE, True
    if abs(trigpoly.eval(poly, hi, 0, mode)) < ENDPOINT_TOL:
        hi, nudged = hi - NUDGE, True
    if nudged:
        logger.debug("interval nudged to [%r, %r]", lo, hi)
    return lo, hi, nudged


def _first_order(v_l, v_r, h, bound):
    return (np.sign(v_l) == np.sign(v_r)) & (np.minimum(np.abs(v_l), np.abs(v_r)) > h * bound)


def _second_order(v_l, dv_l, v_r, dv_r, h, bound):
    sgn_l, sgn_r = np.sign(v_l), np.sign(v_r)
    half = 0.5 * h
    remainder = 0.5 * bound * half * half
    left = np.minimum(sgn_l * v_l, sgn_l * (v_l + dv_l * half)) - remainder
    right = np.minimum(sgn_r * v_r, sgn_r * (v_r - dv_r * half)) - remainder
    return (sgn_l == sgn_r) & (sgn_l != 0) & (left > 0) & (right > 0)


def _values(poly, t, mode, level):
    values = trigpoly.evaluate_many(poly, t, (0, 1, 2), mode)
    values[0] -= level
    return values


def _scan(poly, lo, hi, mode, level, m):
    """
    Certified crossings of f = level on [lo, hi].

    Returns (left, right, g_left, certified, flags) where each crossing is
    bracketed by [left, right] and g = f - level changes sign there.
    """
    m1, m2, m3 = (trigpoly.sup_bound(poly, d, mode) for d in (1, 2, 3))
    t = np.linspace(lo, hi, int(m))
    values = _values(poly, t, mode, level)
    tl, tr, vl, vr = t[:-1], t[1:], values[:, :-1], values[:, 1:]
    cell_budget = 64 * int(m)

    found_l, found_r, found_g = [], [], []
    certified, flags = True, ()
    for round_index in range(MAX_ROUNDS + 1):
        h = tr - tl
        product = vl[0] * vr[0]
        monotone = (_first_order(vl[1], vr[1], h, m2)
                    | _second_order(vl[1], vl[2], vr[1], vr[2], h, m3))
        # a zero exactly on a grid point belongs to the cell it starts
        left_zero = (vl[0] == 0) & (vr[0] != 0)
        right_zero = (vr[0] == 0) & (vl[0] != 0)
        zero_free = (((product > 0) & (monotone
                                       | _first_order(vl[0], vr[0], h, m1)
                                       | _second_order(vl[0], vl[1], vr[0], vr[1], h, m2)))
                     | (monotone & right_zero))
        single = monotone & ((product < 0) | left_zero)
        found_l.append(tl[single])
        found_r.append(tr[single])
        found_g.append(vl[0][single])
        pending = ~(zero_free | single)
        if not pending.any():
            break
        if round_index == MAX_ROUNDS or 2 * pending.sum() > cell_budget:
            changed = pending & (product < 0)
            found_l.append(tl[changed])
            found_r.append(tr[changed])
            found_g.append(vl[0][changed])
            certified, flags = False, ('budget-exhausted',)
            logger.debug("refinement budget exhausted with %d open cells at level %r",
                         int(pending.sum()), level)
            break

        tl, tr, vl, vr = tl[pending], tr[pending], vl[:, pending], vr[:, pending]
        mid = 0.5 * (tl + tr)
        vm = _values(poly, mid, mode, level)
        tl, tr = np.concatenate((tl, mid)), np.concatenate((mid, tr))
        vl, vr = np.concatenate((vl, vm), axis=1), np.concatenate((vm, vr), axis=1)

    left = np.concatenate(found_l)
    order = np.argsort(left, kind='stable')
    return left[order], np.concatenate(found_r)[order], np.concatenate(found_g)[order], certified, flags


def _bisect(poly, mode, level, left, right, g_left, tol=ROOT_TOL):
    """Shrink sign-change brackets to width tol (or float resolution)."""
    left, right, g_left = left.copy(), right.copy(), g_left.copy()
    floor = np.maximum(tol, 4.0 * np.spacing(np.maximum(np.abs(left), np.abs(right))))
    for _ in range(200):
        if left.size == 0 or np.all(right - left <= floor):
            break
        mid = 0.5 * (left + right)
        g_mid = trigpoly.evaluate_many(poly, mid, (0,), mode)[0] - level
        keep_right = np.sign(g_mid) == np.sign(g_left)
        left = np.where(keep_right, mid, left)
        g_left = np.where(keep_right, g_mid, g_left)
        right = np.where(keep_right, right, mid)
    return 0.5 * (left + right)


def estimate_threshold(poly, interval, mode='normalized', m=None, refine_levels=None):
    """
    Certified lower bound on omega = inf over the interval of |f| + |f'|.

    Two rigorous bounds are combined:

    * first order: min over the grid of |f| + |f'| minus h * M with
      M = sup_bound(1) + sup_bound(2), since |f| + |f'| is M-Lipschitz;
    * second order: on each half cell |f| + |f'| is at least the minimum of
      the piecewise-linear |f + f's| + |f' + f''s| less (M2 + M3)(h/2)^2 / 2.

    Cells whose second-order bound falls below half of the best grid value
    are split eightfold until none are left, ``refine_levels`` rounds have
    run (MAX_REFINE_ROUNDS when None) or REFINE_BUDGET * m sub-cells have
    been spent.  Past the budget only the weakest cells are split.

    Parameters
    ----------
    poly : TrigPolynomial
    interval : (float, float)
    mode : {'raw', 'normalized', 'rescaled'}
    m : int, optional
        grid size, >= 16; defaults to :func:`default_grid`
    refine_levels : int, optional
        cap on refinement rounds; 0 keeps the plain grid

    Returns
    -------
    ThresholdReport
    """
    lo, hi = (float(v) for v in interval)
    if m is None:
        m = default_grid(poly.n, (lo, hi), mode)
    if m < 16 or not lo < hi:
        raise ContractError("estimate_threshold needs m >= 16 and lo < hi")
    lipschitz = trigpoly.sup_bound(poly, 1, mode) + trigpoly.sup_bound(poly, 2, mode)
    curvature = trigpoly.sup_bound(poly, 2, mode) + trigpoly.sup_bound(poly, 3, mode)

    t = np.linspace(lo, hi, int(m))
    values = trigpoly.evaluate_many(poly, t, (0, 1, 2), mode)
    h = (hi - lo) / (m - 1)
    envelope = np.abs(values[0]) + np.abs(values[1])
    grid_min = float(np.min(envelope))
    first_order = max(0.0, grid_min - h * lipschitz)

    bounds = _cell_bounds(values[:, :-1], values[:, 1:], h, curvature)
    tl = t[:-1]
    widths = np.full(tl.size, h)
    rounds = MAX_REFINE_ROUNDS if refine_levels is None else int(refine_levels)
    budget = REFINE_BUDGET * int(m)
    for _ in range(rounds):
        weak_idx = np.flatnonzero(bounds < 0.5 * grid_min)
        if weak_idx.size > budget // 8:
            weak_idx = weak_idx[np.argsort(bounds[weak_idx])[:budget // 8]]
        if weak_idx.size == 0:
            break
        budget -= 8 * weak_idx.size
        weak = np.zeros(bounds.size, dtype=bool)
        weak[weak_idx] = True
        sub = np.linspace(0.0, 1.0, 9)
        points = tl[weak, None] + widths[weak, None] * sub[None, :]
        sub_values = trigpoly.evaluate_many(poly, points, (0, 1, 2), mode)
        sub_h = widths[weak] / 8.0
        grid_min = min(grid_min, float(np.min(np.abs(sub_values[0]) + np.abs(sub_values[1]))))
        sub_bounds = _cell_bounds(sub_values[:, :, :-1], sub_values[:, :, 1:], sub_h[:, None], curvature)
        tl = np.concatenate((tl[~weak], points[:, :-1].ravel()))
        widths = np.concatenate((widths[~weak], np.repeat(sub_h, 8)))
        bounds = np.concatenate((bounds[~weak], sub_bounds.ravel()))
    second_order = max(0.0, float(np.min(bounds)))

    omega_lower = max(first_order, second_order)
    f_a, f_b = float(values[0][0]), float(values[0][-1])
    return ThresholdReport(omega_lower=omega_lower, f_at_a=f_a, f_at_b=f_b,
                           delta_max=min(omega_lower, abs(f_a), abs(f_b)),
                           grid_step=h, sup_bound=lipschitz, grid_min=grid_min)


def _piecewise_linear_min(v, dv, w, dw, span):
    """min over s in [0, span] of |v + dv s| + |w + dw s| (convex, piecewise linear)."""
    with np.errstate(divide='ignore', invalid='ignore'):
        kink_v = np.where(dv != 0, -v / dv, 0.0)
        kink_w = np.where(dw != 0, -w / dw, 0.0)
    best = np.abs(v) + np.abs(w)
    for s in (span, np.clip(kink_v, 0.0, span), np.clip(kink_w, 0.0, span)):
        best = np.minimum(best, np.abs(v + dv * s) + np.abs(w + dw * s))
    return best


def _cell_bounds(left, right, h, curvature):
    half = 0.5 * h
    from_left = _piecewise_linear_min(left[0], left[1], left[1], left[2], half)
    from_right = _piecewise_linear_min(right[0], -right[1], right[1], -right[2], half)
    return np.minimum(from_left, from_right) - 0.5 * curvature * half * half


def count_sign_changes(poly, interval, mode='normalized', m=None, refine=True):
    """
    Certified count of sign changes on an adaptively refined grid.

    Endpoints with |f| < 1e-14 are moved inward by 1e-9 and the nudge is
    recorded.  Double zeros never certify; the count is then returned with
    ``certified=False`` and a ``budget-exhausted`` flag.
    """
    lo, hi, nudged = _nudge(poly, interval, mode)
    if m is None:
        m = default_grid(poly.n, (lo, hi), mode)
    left, right, g_left, certified, flags = _scan(poly, lo, hi, mode, 0.0, m)
    count = int(left.size)
    if count > zero_budget(poly.n, (lo, hi), mode):
        certified, flags = False, flags + ('budget-exceeded',)
    roots = tuple(float(r) for r in _bisect(poly, mode, 0.0, left, right, g_left)) if refine else None
    return ZeroCount(count=count, method='sign-change', certified=certified, roots=roots,
                     interval=(lo, hi), nudged=nudged, flags=flags)


def _band_components(poly, lo, hi, mode, delta, m):
    """
    Components of {|f| < delta} as (start, end, entry level, exit level).

    Every crossing of f = +delta or f = -delta toggles membership of the band.
    The level scans start from m + 1 nodes, a grid sharing no interior node
    with the m-node sign-change scan.
    """
    events, certified, flags = [], True, ()
    for level in (delta, -delta):
        left, right, g_left, ok, level_flags = _scan(poly, lo, hi, mode, level, int(m) + 1)
        certified &= ok
        flags += level_flags
        for point in _bisect(poly, mode, level, left, right, g_left):
            events.append((float(point), level))
    events.sort()

    inside = abs(trigpoly.eval(poly, lo, 0, mode)) < delta
    start, entry = (lo, None) if inside else (None, None)
    components = []
    for point, level in events:
        if inside:
            components.append((start, point, entry, level))
        else:
            start, entry = point, level
        inside = not inside
    if inside:
        components.append((start, hi, entry, None))
    return components, certified, tuple(dict.fromkeys(flags))


def kac_rice_count(poly, interval, mode='normalized', delta=None, threshold=None, m=None):
    """
    Zero count as the number of components of {|f| < delta}.

    Parameters
    ----------
    poly : TrigPolynomial
    interval : (float, float)
    mode : {'raw', 'normalized', 'rescaled'}
    delta : float, optional
        band half-width; defaults to :func:`default_delta`
    threshold : ThresholdReport, optional
        computed on the (nudged) interval when omitted
    m : int, optional
        initial scan grid

    Returns
    -------
    ZeroCount
        ``certified`` requires delta < threshold.delta_max, certified scans and
        every component crossing the band from one side to the other.
    """
    lo, hi, nudged = _nudge(poly, interval, mode)
    if m is None:
        m = default_grid(poly.n, (lo, hi), mode)
    if threshold is None:
        threshold = estimate_threshold(poly, (lo, hi), mode, m)
    if delta is None:
        delta = default_delta(threshold, poly.n)
    flags = ()
    if not delta > 0:
        return ZeroCount(count=0, method='kac-rice-components', certified=False,
                         interval=(lo, hi), nudged=nudged, flags=('threshold-violation',))
    if delta >= threshold.delta_max:
        flags += ('threshold-violation',)

    components, certified, scan_flags = _band_components(poly, lo, hi, mode, delta, m)
    flags += scan_flags
    if any(entry is None or exit_level is None or entry == exit_level
           for _, _, entry, exit_level in components):
        flags += ('non-monotone-component',)
    return ZeroCount(count=len(components), method='kac-rice-components',
                     certified=certified and not flags, interval=(lo, hi), nudged=nudged,
                     flags=flags)


def kac_rice_quadrature(poly, interval, mode='normalized', delta=0.05, q=64, m=None):
    """
    Direct value of (1 / 2 delta) * integral of |f'| 1{|f| < delta}.

    Gauss-Legendre quadrature with q nodes is applied on every component of
    the band, so the integrand is smooth on each piece.
    """
    if not delta > 0:
        raise ContractError(f"delta must be positive, got {delta}")
    lo, hi = (float(v) for v in interval)
    if m is None:
        m = default_grid(poly.n, (lo, hi), mode)
    components, _, _ = _band_components(poly, lo, hi, mode, delta, m)
    nodes, weights = legendre.leggauss(int(q))
    total = 0.0
    for start, end, _, _ in components:
        half = 0.5 * (end - start)
        points = start + half * (nodes + 1.0)
        total += half * float(weights @ np.abs(trigpoly.evaluate_many(poly, points, (1,), mode)[0]))
    return total / (2.0 * delta)
