""" Incremental orthogonalization backends

Modified Gram-Schmidt, plain Householder reflectors, and the compact WY
representation H_1 H_2 ... H_j = I - Y_j T_j Y_j^T in two storage schemes:

* ordinary: Y (n x m, leading zeros stored) and T (m x m) in separate arrays,
  every product taken over full columns;
* packed: one (n+1) x m buffer holding only the nonzero parts. Column k
  (0-based) stores T[0:k, k] in rows 0..k-1, t_k in row k and the nonzero tail
  of y_k (rows k..n-1 of y_k) in rows k+1..n. T is then the upper triangle of
  buffer[0:m, 0:m] and Y is buffer[1:n+1] read on and below the diagonal.

All accumulators share one interface so the inverse-iteration driver can swap
them. Reflector indices `j` in the public API are 1-based, matching the
usual statement of the algorithms.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .kernels import SERIAL_POOL, KernelCounters, KernelPool
from .tridiag import EPS

VARIANTS = ("householder", "ordinary", "packed")


class DegenerateVectorError(ArithmeticError):
    """ A vector has no component left outside the span being orthogonalized against """

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class AccumulatorFullError(RuntimeError):
    """ More reflectors appended than the accumulator was sized for """


@dataclass(frozen=True)
class ReflectorParts:
    """ Nonzero part of one Householder reflector H_j = I - t y y^T

    `tail` is rows j..n of y (y is zero above row j); `c` is the value H_j
    places in row j, i.e. H_j u = [u_1, ..., u_{j-1}, c, 0, ..., 0].
    """
    j: int
    tail: np.ndarray
    t: float
    c: float


def make_reflector(
    u_tail: np.ndarray,
    j: int,
    reference_norm: Optional[float] = None,
    reduced: bool = True,
    counters: Optional[KernelCounters] = None,
    pool: KernelPool = SERIAL_POOL
) -> ReflectorParts:
    """ Build the reflector sending rows j..n of u onto c e_j

    c = -sgn(u_j) ||u_tail|| with sgn(0) = +1. With `reduced` set t comes from
    1/(c^2 - u_j c), otherwise from 2/||y||^2 at the cost of a second norm.
    `reference_norm` is the norm of the vector u was derived from; a tail below
    n*eps times it is treated as degenerate.
    """
    if counters is None:
        counters = KernelCounters()
    u_tail = np.asarray(u_tail, dtype=np.float64)
    n = j - 1 + u_tail.shape[0]

    norm = pool.nrm2(u_tail, counters)
    if reference_norm is None:
        reference_norm = norm
    if norm == 0.0 or norm < n * EPS * reference_norm:
        raise DegenerateVectorError(f"Reflector {j} has a degenerate input vector", j)

    lead = u_tail[0]
    c = norm if lead < 0.0 else -norm
    tail = u_tail.copy()
    tail[0] = lead - c

    if reduced:
        t = 1.0 / (c * c - lead * c)
    else:
        t = 2.0 / pool.nrm2(tail, counters) ** 2

    tail.setflags(write=False)
    return ReflectorParts(j=j, tail=tail, t=t, c=c)


def mgs_project(
    v: np.ndarray,
    basis: Sequence[np.ndarray],
    counters: Optional[KernelCounters] = None,
    pool: KernelPool = SERIAL_POOL
) -> np.ndarray:
    """ Remove each basis direction from v in turn (modified Gram-Schmidt)

    `basis` is a sequence of unit vectors or an n x k array of unit columns.
    Each subtraction uses the already-updated vector; one synchronization
    event per basis vector.
    """
    if counters is None:
        counters = KernelCounters()
    result = np.array(v, dtype=np.float64)

    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        basis = basis.T
    for q in basis:
        if q.shape[0] != result.shape[0]:
            raise ValueError(
                f"Dimension mismatch: vector is {result.shape[0]}, basis vector is {q.shape[0]}")
        pool.project_out(result, q, counters)
    return result


class ReflectorAccumulator:
    """ Product of Householder reflectors built up one reflector at a time

    Subclasses provide the storage scheme. The accumulator is not safe for
    concurrent writers; read-only use (apply, extract) of a quiescent
    accumulator may be shared.
    """
    variant: str = ""
    reduced_t = True

    def __init__(
        self,
        n: int,
        capacity: int,
        pool: KernelPool = SERIAL_POOL,
        counters: Optional[KernelCounters] = None
    ):
        if not 1 <= capacity <= n:
            raise ValueError(f"Capacity must be between 1 and {n}, got {capacity}")
        self.n = n
        self.capacity = capacity
        self.count = 0
        self.pool = pool
        self.counters = counters if counters is not None else KernelCounters()

    @property
    def flops(self) -> int:
        """ Floating-point operations spent by this accumulator's kernels """
        return self.counters.flops

    @property
    def sync_events(self) -> int:
        """ Synchronization events spent by this accumulator's kernels """
        return self.counters.sync_events

    @property
    def storage_words(self) -> int:
        """ Scalars held for `capacity` reflectors """
        raise NotImplementedError

    def make_reflector(self, u_tail: np.ndarray, reference_norm: Optional[float] = None):
        """ Reflector for the next slot, using this variant's t formula """
        return make_reflector(
            u_tail,
            self.count + 1,
            reference_norm=reference_norm,
            reduced=self.reduced_t,
            counters=self.counters,
            pool=self.pool,
        )

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        """ Rows count+1..n of (H_1 ... H_count)^T v """
        v = np.asarray(v, dtype=np.float64)
        if v.shape[0] != self.n:
            raise ValueError(f"Dimension mismatch: accumulator is {self.n}, vector is {v.shape[0]}")
        if self.count == 0:
            raise ValueError("Cannot apply an empty accumulator")
        return self._apply_transpose(v)

    def append(self, parts: ReflectorParts):
        """ Add H_{count+1} to the product """
        if self.count >= self.capacity:
            raise AccumulatorFullError(
                f"Accumulator already holds {self.capacity} reflectors")
        if parts.j != self.count + 1:
            raise ValueError(f"Expected reflector {self.count + 1}, got {parts.j}")
        if parts.tail.shape[0] != self.n - self.count:
            raise ValueError(
                f"Reflector {parts.j} needs a tail of length {self.n - self.count}")
        self._append(parts)
        self.count += 1

    def pop(self):
        """ Drop the most recently appended reflector """
        if self.count == 0:
            raise ValueError("Cannot pop from an empty accumulator")
        self.count -= 1

    def extract(self, j: int) -> np.ndarray:
        """ Column j of the orthogonal product (sign is variant-dependent) """
        if not 1 <= j <= self.count:
            raise IndexError(f"Column {j} is outside 1..{self.count}")
        return self._extract(j)

    def y_matrix(self) -> np.ndarray:
        """ Dense Y (n x count) with its leading zeros """
        y = np.zeros((self.n, self.count))
        for k in range(self.count):
            y[k:, k] = self._tail(k)
        return y

    def t_matrix(self) -> np.ndarray:
        """ Dense upper-triangular T (count x count) """
        raise NotImplementedError

    def dense_product(self) -> np.ndarray:
        """ I - Y T Y^T, for checks against explicit reflector products """
        y = self.y_matrix()
        return np.eye(self.n) - y @ self.t_matrix() @ y.T

    def _tail(self, k: int) -> np.ndarray:
        raise NotImplementedError

    def _apply_transpose(self, v):
        raise NotImplementedError

    def _append(self, parts):
        raise NotImplementedError

    def _extract(self, j):
        raise NotImplementedError


class HouseholderAccumulator(ReflectorAccumulator):
    """ Reflectors kept separately and applied one after another """
    variant = "householder"
    reduced_t = False

    def __init__(self, n, capacity, pool=SERIAL_POOL, counters=None):
        super().__init__(n, capacity, pool, counters)
        self._tails = [None] * capacity
        self._ts = np.zeros(capacity)

    @property
    def storage_words(self):
        return self.n * self.capacity + self.capacity

    def t_matrix(self):
        # I - Y T Y^T with T built from the reflector sequence, for comparisons only
        y = self.y_matrix()
        t = np.zeros((self.count, self.count))
        for k in range(self.count):
            t[:k, k] = -self._ts[k] * t[:k, :k] @ (y[:, :k].T @ y[:, k])
            t[k, k] = self._ts[k]
        return t

    def _tail(self, k):
        return self._tails[k]

    def _apply_transpose(self, v):
        u = v.copy()
        for k in range(self.count):
            self.pool.reflect(u[k:], self._tails[k], self._ts[k], self.counters)
        return u[self.count:]

    def _append(self, parts):
        self._tails[self.count] = parts.tail
        self._ts[self.count] = parts.t

    def _extract(self, j):
        q = np.zeros(self.n)
        q[j - 1] = 1.0
        for k in range(j - 1, -1, -1):
            self.pool.reflect(q[k:], self._tails[k], self._ts[k], self.counters)
        return q


class OrdinaryAccumulator(ReflectorAccumulator):
    """ Compact WY with Y and T stored in full """
    variant = "ordinary"
    reduced_t = False

    def __init__(self, n, capacity, pool=SERIAL_POOL, counters=None):
        super().__init__(n, capacity, pool, counters)
        self._y = np.zeros((n, capacity), order="F")
        self._t = np.zeros((capacity, capacity), order="F")

    @property
    def storage_words(self):
        return self.n * self.capacity + self.capacity ** 2

    def t_matrix(self):
        return np.triu(self._t[:self.count, :self.count])

    def _tail(self, k):
        return self._y[k:, k]

    def _apply_transpose(self, v):
        k = self.count
        y = self._y[:, :k]
        u = v.copy()
        w = self.pool.gemv(y, u, self.counters, trans=True)
        w = self.pool.trmv(self._t[:k, :k], w, self.counters, trans=True)
        u -= self.pool.gemv(y, w, self.counters)
        return u[k:]

    def _append(self, parts):
        k = self.count
        y = np.zeros(self.n)
        y[k:] = parts.tail
        if k > 0:
            column = self.pool.gemv(self._y[:, :k], y, self.counters, trans=True)
            column *= -parts.t
            self._t[:k, k] = self.pool.trmv(self._t[:k, :k], column, self.counters)
        self._t[k, k] = parts.t
        self._y[:, k] = y

    def _extract(self, j):
        x = self._y[j - 1, :j].copy()
        x = self.pool.trmv(self._t[:j, :j], x, self.counters)
        q = -self.pool.gemv(self._y[:, :j], x, self.counters)
        q[j - 1] += 1.0
        return q


class PackedAccumulator(ReflectorAccumulator):
    """ Compact WY in one (n+1) x m buffer, never touching the zeros of Y

    Returns q_j with the opposite sign to the other variants.
    """
    variant = "packed"
    reduced_t = True

    def __init__(self, n, capacity, pool=SERIAL_POOL, counters=None):
        super().__init__(n, capacity, pool, counters)
        self._buffer = np.zeros((n + 1, capacity), order="F")

    @property
    def storage_words(self):
        return (self.n + 1) * self.capacity

    def t_matrix(self):
        return np.triu(self._buffer[:self.count, :self.count])

    def _tail(self, k):
        return self._buffer[k + 1:, k]

    def _lead(self, k):
        """ L_k: rows 0..k-1 of the first k columns, lower triangle """
        return self._buffer[1:k + 1, :k]

    def _body(self, k, row):
        """ Y rows row..n-1 of the first k columns """
        return self._buffer[row + 1:, :k]

    def _apply_transpose(self, v):
        k = self.count
        body = self._body(k, k)
        w = self.pool.trmv(self._lead(k), v[:k], self.counters, lower=True, trans=True)
        w += self.pool.gemv(body, v[k:], self.counters, trans=True)
        w = self.pool.trmv(self._buffer[:k, :k], w, self.counters, trans=True)
        return v[k:] - self.pool.gemv(body, w, self.counters)

    def _append(self, parts):
        k = self.count
        if k > 0:
            column = self.pool.gemv(self._body(k, k), parts.tail, self.counters, trans=True)
            column *= -parts.t
            self._buffer[:k, k] = self.pool.trmv(self._buffer[:k, :k], column, self.counters)
        self._buffer[k, k] = parts.t
        self._buffer[k + 1:, k] = parts.tail

    def _extract(self, j):
        x = self._buffer[j, :j].copy()
        x = self.pool.trmv(self._buffer[:j, :j], x, self.counters)
        q = np.empty(self.n)
        q[:j] = self.pool.trmv(self._lead(j), x, self.counters, lower=True)
        q[j:] = self.pool.gemv(self._body(j, j), x, self.counters)
        q[j - 1] -= 1.0
        return q


_ACCUMULATORS = {
    "householder": HouseholderAccumulator,
    "ordinary": OrdinaryAccumulator,
    "packed": PackedAccumulator,
}


def make_accumulator(
    variant: str,
    n: int,
    capacity: int,
    pool: KernelPool = SERIAL_POOL,
    counters: Optional[KernelCounters] = None
) -> ReflectorAccumulator:
    """ Accumulator for one of the VARIANTS """
    try:
        accumulator_class = _ACCUMULATORS[variant]
    except KeyError:
        raise ValueError(f"Unknown accumulator variant \"{variant}\"") from None
    return accumulator_class(n, capacity, pool, counters)


def apply_accumulated_transpose(acc: ReflectorAccumulator, v: np.ndarray) -> np.ndarray:
    """ Rows count+1..n of (I - Y T^T Y^T) v """
    return acc.apply_transpose(v)


def append_reflector(acc: ReflectorAccumulator, parts: ReflectorParts):
    """ Extend Y and T by one reflector """
    acc.append(parts)


def extract_orthonormal_column(acc: ReflectorAccumulator, j: int) -> np.ndarray:
    """ q_j = (I - Y T Y^T) e_j, negated by the packed variant """
    return acc.extract(j)


def _orthogonalize_with(acc: ReflectorAccumulator, v: np.ndarray) -> np.ndarray:
    m = v.shape[1]
    q = np.empty((acc.n, m))
    for j in range(m):
        column = v[:, j]
        u_tail = column if acc.count == 0 else acc.apply_transpose(column)
        try:
            parts = acc.make_reflector(u_tail, reference_norm=np.linalg.norm(column))
        except DegenerateVectorError as error:
            raise DegenerateVectorError(
                f"Column {j + 1} is numerically dependent on the columns before it",
                j + 1,
            ) from error
        acc.append(parts)
        q[:, j] = acc.extract(j + 1)
    return q


def householder_orthogonalize(
    v: np.ndarray,
    counters: Optional[KernelCounters] = None,
    pool: KernelPool = SERIAL_POOL
) -> np.ndarray:
    """ Orthonormal basis of the columns of v, one reflector applied at a time """
    v = np.asarray(v, dtype=np.float64)
    n, m = v.shape
    if m > n:
        raise ValueError(f"Cannot orthogonalize {m} vectors of length {n}")
    return _orthogonalize_with(HouseholderAccumulator(n, m, pool, counters), v)


def cwy_orthogonalize(
    v: np.ndarray,
    variant: str = "packed",
    counters: Optional[KernelCounters] = None,
    pool: KernelPool = SERIAL_POOL
) -> np.ndarray:
    """ Orthonormal basis of the columns of v through the compact WY accumulator """
    if variant not in ("ordinary", "packed"):
        raise ValueError(f"Unknown compact WY variant \"{variant}\"")
    v = np.asarray(v, dtype=np.float64)
    n, m = v.shape
    if m > n:
        raise ValueError(f"Cannot orthogonalize {m} vectors of length {n}")
    return _orthogonalize_with(make_accumulator(variant, n, m, pool, counters), v)


def mgs_orthogonalize(
    v: np.ndarray,
    counters: Optional[KernelCounters] = None,
    pool: KernelPool = SERIAL_POOL
) -> np.ndarray:
    """ Orthonormal basis of the columns of v by modified Gram-Schmidt

    Only the projections are counted; normalizing each column is left out.
    """
    if counters is None:
        counters = KernelCounters()
    v = np.asarray(v, dtype=np.float64)
    n, m = v.shape
    q = np.empty((n, m))
    for j in range(m):
        column = mgs_project(v[:, j], q[:, :j], counters, pool)
        norm = np.linalg.norm(column)
        if norm == 0.0 or norm < n * EPS * np.linalg.norm(v[:, j]):
            raise DegenerateVectorError(
                f"Column {j + 1} is numerically dependent on the columns before it",
                j + 1,
            )
        q[:, j] = column / norm
    return q
