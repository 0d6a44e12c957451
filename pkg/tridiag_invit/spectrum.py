""" Sturm-sequence bisection for the eigenvalues of a symmetric tridiagonal matrix """
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numba import njit

from .tridiag import EPS, SymTridiagonal, norm_estimate, norm_scale, pivot_floor

# Safety net against a tolerance below the floating-point resolution
MAX_BISECTION_STEPS = 200


@dataclass(frozen=True)
class EigenvalueEstimates:
    """ The m smallest eigenvalues, ascending, with their final bisection half-widths """
    values: np.ndarray
    half_widths: np.ndarray
    n: int
    m: int

    def __len__(self):
        return self.m


@njit(cache=True)
def _sturm_counts(diag, off_sq, points, pivmin, counts):
    n = diag.shape[0]
    for p in range(points.shape[0]):
        x = points[p]
        d = diag[0] - x
        if abs(d) < pivmin:
            d = pivmin
        count = 1 if d < 0.0 else 0
        for i in range(1, n):
            d = (diag[i] - x) - off_sq[i - 1] / d
            if abs(d) < pivmin:
                d = pivmin
            if d < 0.0:
                count += 1
        counts[p] = count


def _counts(T: SymTridiagonal, points: np.ndarray, pivmin: float) -> np.ndarray:
    counts = np.zeros(points.shape[0], dtype=np.int64)
    _sturm_counts(T.diag, T.offdiag ** 2, points, pivmin, counts)
    return counts


def sturm_count(T: SymTridiagonal, x: float, tnorm: Optional[float] = None) -> int:
    """ Number of eigenvalues of T strictly below x

    Pivots in the LDL^T recurrence smaller than eps*||T|| count as positive, so an
    eigenvalue sitting exactly on x is not counted.
    """
    if not np.isfinite(x):
        raise ValueError("The point must be finite")
    if tnorm is None:
        tnorm = norm_estimate(T)
    return int(_counts(T, np.array([x], dtype=np.float64), pivot_floor(tnorm))[0])


def gershgorin_interval(T: SymTridiagonal) -> Tuple[float, float]:
    """ [min(a_i - r_i), max(a_i + r_i)] with r_i the off-diagonal row sums """
    radius = np.zeros(T.n)
    if T.n > 1:
        abs_off = np.abs(T.offdiag)
        radius[:-1] += abs_off
        radius[1:] += abs_off
    return float(np.min(T.diag - radius)), float(np.max(T.diag + radius))


def default_tolerance(T: SymTridiagonal, tnorm: Optional[float] = None) -> float:
    """ eps * ||T|| * n """
    if tnorm is None:
        tnorm = norm_estimate(T)
    return EPS * norm_scale(tnorm) * T.n


class ToleranceError(ValueError):
    """ Bisection tolerance that is not positive or below the Sturm count resolution """


def bisect_eigenvalues(
    T: SymTridiagonal,
    m: Optional[int] = None,
    tol: Optional[float] = None
) -> EigenvalueEstimates:
    """ Bracket the m smallest eigenvalues of T to half-width tol

    All m brackets start from the Gershgorin interval and are halved together,
    one vectorized Sturm count per step. tol may not go below
    default_tolerance(T): narrower brackets are under the rounding error of the
    counts and stop enclosing an eigenvalue.
    """
    n = T.n
    if m is None:
        m = n
    if not 1 <= m <= n:
        raise ValueError(f"Eigenvalue count must be between 1 and {n}, got {m}")

    tnorm = norm_estimate(T)
    floor = default_tolerance(T, tnorm)
    if tol is None:
        tol = floor
    if not tol > 0.0:
        raise ToleranceError(f"Tolerance must be positive, got {tol}")
    if tol < floor:
        raise ToleranceError(
            f"Tolerance {tol:.3e} is below the Sturm count resolution {floor:.3e} of this matrix")

    pivmin = pivot_floor(tnorm)
    low, high = gershgorin_interval(T)
    pad = 2.0 * n * pivmin + 2.0 * pivmin
    low -= pad
    high += pad

    lower = np.full(m, low)
    upper = np.full(m, high)
    index = np.arange(m)
    active = np.ones(m, dtype=bool)
    # leaves room for the rounding of the midpoints and half-widths below
    width_limit = 2.0 * (tol - 2.0 * np.spacing(max(abs(low), abs(high))))

    for _ in range(MAX_BISECTION_STEPS):
        active &= (upper - lower) > width_limit
        if not np.any(active):
            break

        todo = np.flatnonzero(active)
        mid = 0.5 * (lower[todo] + upper[todo])

        # no representable midpoint left
        stalled = (mid <= lower[todo]) | (mid >= upper[todo])
        active[todo[stalled]] = False
        todo = todo[~stalled]
        mid = mid[~stalled]

        below = _counts(T, mid, pivmin) > index[todo]
        upper[todo[below]] = mid[below]
        lower[todo[~below]] = mid[~below]

    values = 0.5 * (lower + upper)
    half_widths = _enclosing_half_widths(values, lower, upper)

    return EigenvalueEstimates(values=values, half_widths=half_widths, n=n, m=m)


def _enclosing_half_widths(values, lower, upper):
    """ Smallest h with [value - h, value + h] covering [lower, upper] in floating point """
    half_widths = np.maximum(values - lower, upper - values)
    for _ in range(4):
        short = (values - half_widths > lower) | (values + half_widths < upper)
        if not np.any(short):
            break
        half_widths[short] = np.nextafter(half_widths[short], np.inf)
    return half_widths
