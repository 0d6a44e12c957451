""" Instrumented BLAS-style kernels with a row-block worker pool

Every kernel records its floating-point operation count and one
synchronization event on the `KernelCounters` passed to it. A synchronization
event is one barrier-equivalent: each matrix-vector product, each triangular
product and each reduction counts once, whatever the thread count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.linalg import blas

# Blocks smaller than this are not worth handing to another thread
MIN_ROWS_PER_BLOCK = 128


@dataclass
class KernelCounters:
    """ Running totals of floating-point operations and synchronization events """
    flops: int = 0
    sync_events: int = 0

    def record(self, flops: int, syncs: int = 1):
        """ Account for one kernel launch """
        self.flops += int(flops)
        self.sync_events += syncs

    def merge(self, other: "KernelCounters"):
        """ Add another set of counters into this one """
        self.flops += other.flops
        self.sync_events += other.sync_events


class KernelPool:
    """ Row-block parallel matrix-vector kernels

    With one thread every kernel is a single serial numpy/BLAS call, which keeps
    results bit-reproducible. With more threads the rows of the matrix are split
    into contiguous blocks; transposed products sum the per-block partial
    results in block order.
    """

    def __init__(self, threads: int = 1, min_rows_per_block: int = MIN_ROWS_PER_BLOCK):
        if threads < 1:
            raise ValueError(f"Thread count must be at least 1, got {threads}")
        self.threads = threads
        self.min_rows_per_block = min_rows_per_block
        self._executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def close(self):
        """ Shut down the worker threads """
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def _row_blocks(self, rows: int) -> List[slice]:
        if self._executor is None:
            return [slice(0, rows)]
        count = min(self.threads, rows // self.min_rows_per_block)
        if count <= 1:
            return [slice(0, rows)]
        bounds = np.linspace(0, rows, count + 1).astype(int)
        return [slice(start, stop) for start, stop in zip(bounds[:-1], bounds[1:])]

    def gemv(
        self,
        a: np.ndarray,
        x: np.ndarray,
        counters: KernelCounters,
        trans: bool = False
    ) -> np.ndarray:
        """ a @ x, or a.T @ x when trans is set """
        rows, cols = a.shape
        counters.record(2 * rows * cols)

        blocks = self._row_blocks(rows)
        if len(blocks) == 1:
            return a.T @ x if trans else a @ x

        if trans:
            partials = list(self._executor.map(lambda blk: a[blk].T @ x[blk], blocks))
            return np.sum(partials, axis=0)

        parts = list(self._executor.map(lambda blk: a[blk] @ x, blocks))
        return np.concatenate(parts)

    def trmv(
        self,
        a: np.ndarray,
        x: np.ndarray,
        counters: KernelCounters,
        lower: bool = False,
        trans: bool = False
    ) -> np.ndarray:
        """ Triangular product reading only the lower or upper triangle of a """
        k = x.shape[0]
        counters.record(k * k)
        if k == 0:
            return np.zeros(0)
        return blas.dtrmv(
            np.asfortranarray(a),
            np.array(x, dtype=np.float64),
            lower=int(lower),
            trans=int(trans),
        )

    @staticmethod
    def nrm2(x: np.ndarray, counters: KernelCounters) -> float:
        """ Euclidean norm, one reduction """
        counters.record(2 * x.shape[0])
        return float(np.linalg.norm(x))

    @staticmethod
    def dot(x: np.ndarray, y: np.ndarray, counters: KernelCounters) -> float:
        """ Inner product, one reduction """
        counters.record(2 * x.shape[0])
        return float(x @ y)

    @staticmethod
    def project_out(v: np.ndarray, q: np.ndarray, counters: KernelCounters) -> np.ndarray:
        """ v - <v, q> q in place, fused as a single kernel """
        counters.record(4 * v.shape[0])
        v -= (v @ q) * q
        return v

    @staticmethod
    def reflect(v: np.ndarray, y: np.ndarray, t: float, counters: KernelCounters) -> np.ndarray:
        """ (I - t y y^T) v in place, fused as a single kernel """
        counters.record(4 * v.shape[0])
        v -= (t * (y @ v)) * y
        return v


SERIAL_POOL = KernelPool(threads=1)
