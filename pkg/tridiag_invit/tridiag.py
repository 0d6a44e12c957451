""" Symmetric tridiagonal matrices, norms and the pivoted shifted solve """
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class SymTridiagonal:
    """ Real symmetric tridiagonal matrix T held as its diagonal and off-diagonal

    `offdiag[i]` couples rows i and i+1. Both arrays are copied and frozen on
    construction so a matrix can be shared between threads.
    """
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.array(self.diag, dtype=np.float64)
        offdiag = np.array(self.offdiag, dtype=np.float64).reshape(-1)

        if diag.ndim != 1 or diag.shape[0] < 1:
            raise ValueError("The diagonal must be a non-empty vector")
        if offdiag.shape[0] != diag.shape[0] - 1:
            raise ValueError(
                f"Expected {diag.shape[0] - 1} off-diagonal entries, got {offdiag.shape[0]}")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise ValueError("Matrix entries must be finite")

        diag.setflags(write=False)
        offdiag.setflags(write=False)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def n(self) -> int:
        """ Dimension of the matrix """
        return self.diag.shape[0]

    def to_dense(self) -> np.ndarray:
        """ Dense n x n copy, for oracles and small reports """
        dense = np.diag(self.diag)
        if self.n > 1:
            dense += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return dense


@dataclass(frozen=True)
class PivotedTriFactor:
    """ P(T - shift*I) = LU from Gaussian elimination with partial pivoting

    `lower` holds the n-1 multipliers, `upper_d`, `upper_e`, `upper_f` the main,
    first and second superdiagonals of U, and `pivot_flags[i]` records whether
    rows i and i+1 were swapped at step i.
    """
    n: int
    lower: np.ndarray
    upper_d: np.ndarray
    upper_e: np.ndarray
    upper_f: np.ndarray
    pivot_flags: np.ndarray
    shift: float


def norm_estimate(T: SymTridiagonal) -> float:
    """ ||T||_1, the largest absolute column sum (equal to ||T||_inf) """
    col_sums = np.abs(T.diag)
    if T.n > 1:
        abs_off = np.abs(T.offdiag)
        col_sums[:-1] += abs_off
        col_sums[1:] += abs_off
    return float(np.max(col_sums))


def norm_scale(tnorm: float) -> float:
    """ ||T|| for scaling thresholds, 1 for the zero matrix """
    return tnorm if tnorm > 0.0 else 1.0


def pivot_floor(tnorm: float) -> float:
    """ Smallest pivot magnitude allowed in the shifted factorization """
    return EPS * norm_scale(tnorm)


def matvec(T: SymTridiagonal, x: np.ndarray) -> np.ndarray:
    """ Tx for a vector, or for each column when x is an n x k matrix """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != T.n:
        raise ValueError(f"Dimension mismatch: matrix is {T.n}, vector is {x.shape[0]}")

    if x.ndim == 1:
        y = T.diag * x
        y[:-1] += T.offdiag * x[1:]
        y[1:] += T.offdiag * x[:-1]
        return y

    y = T.diag[:, None] * x
    y[:-1] += T.offdiag[:, None] * x[1:]
    y[1:] += T.offdiag[:, None] * x[:-1]
    return y


@njit(cache=True)
def _factor(d, du, dl, du2, piv, pivmin):
    n = d.shape[0]
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if abs(d[i]) < pivmin:
                d[i] = pivmin if d[i] >= 0.0 else -pivmin
            fact = dl[i] / d[i]
            dl[i] = fact
            d[i + 1] -= fact * du[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            if abs(d[i]) < pivmin:
                d[i] = pivmin if d[i] >= 0.0 else -pivmin
            dl[i] = fact
            temp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = temp - fact * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            piv[i] = True
    if abs(d[n - 1]) < pivmin:
        d[n - 1] = pivmin if d[n - 1] >= 0.0 else -pivmin


@njit(cache=True)
def _solve(d, du, dl, du2, piv, b):
    n = d.shape[0]
    for i in range(n - 1):
        if piv[i]:
            temp = b[i]
            b[i] = b[i + 1]
            b[i + 1] = temp - dl[i] * b[i]
        else:
            b[i + 1] -= dl[i] * b[i]

    b[n - 1] /= d[n - 1]
    if n > 1:
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i]


def factor_shifted(
    T: SymTridiagonal,
    shift: float,
    tnorm: Optional[float] = None
) -> PivotedTriFactor:
    """ Factor T - shift*I with partial pivoting

    Pivots smaller than eps*||T|| are replaced by +-eps*||T|| (keeping their
    sign, + for an exact zero) so the factor is usable even at an exact
    eigenvalue. Pass `tnorm` to reuse a norm already computed by the caller.
    """
    if not np.isfinite(shift):
        raise ValueError("The shift must be finite")
    if tnorm is None:
        tnorm = norm_estimate(T)

    n = T.n
    d = T.diag - shift
    du = T.offdiag.copy()
    dl = T.offdiag.copy()
    du2 = np.zeros(max(n - 2, 0))
    piv = np.zeros(max(n - 1, 0), dtype=np.bool_)

    _factor(d, du, dl, du2, piv, pivot_floor(tnorm))

    for array in (d, du, dl, du2, piv):
        array.setflags(write=False)

    return PivotedTriFactor(
        n=n,
        lower=dl,
        upper_d=d,
        upper_e=du,
        upper_f=du2,
        pivot_flags=piv,
        shift=float(shift),
    )


def solve_shifted(factor: PivotedTriFactor, b: np.ndarray) -> np.ndarray:
    """ Solve (T - shift*I)x = b with a stored factor; b is not modified """
    x = np.array(b, dtype=np.float64).reshape(-1)
    if x.shape[0] != factor.n:
        raise ValueError(
            f"Dimension mismatch: factor is {factor.n}, right-hand side is {x.shape[0]}")

    _solve(
        factor.upper_d,
        factor.upper_e,
        factor.lower,
        factor.upper_f,
        factor.pivot_flags,
        x,
    )
    return x
