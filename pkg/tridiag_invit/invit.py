""" Inverse iteration for the eigenvectors of a symmetric tridiagonal matrix

Eigenvalues closer than 1e-3 ||T|| to their predecessor are treated as one
cluster; vectors of a cluster are reorthogonalized against the ones already
accepted in it, either by modified Gram-Schmidt (the classical driver) or by
Householder reflectors accumulated in compact WY form.
"""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .kernels import SERIAL_POOL, KernelCounters, KernelPool
from .metrics import RunMetrics, residuals
from .ortho import DegenerateVectorError, make_accumulator, mgs_project
from .tridiag import (EPS, SymTridiagonal, factor_shifted, norm_estimate, norm_scale,
                      solve_shifted)

logger = logging.getLogger(__name__)

CLUSTER_GAP = 1e-3
MAX_RESTARTS = 2

BACKENDS = ("mgs", "householder", "cwy_ordinary", "cwy_packed")
REFLECTOR_VARIANTS = {
    "householder": "householder",
    "cwy_ordinary": "ordinary",
    "cwy_packed": "packed",
}


@dataclass(frozen=True)
class InverseIterationConfig:
    """ Knobs of the inverse-iteration drivers

    `growth_threshold` of None means 1/(100 n eps). `perturb_factor` scales the
    minimum separation enforced between coincident shifts.
    """
    max_iters: int = 5
    growth_threshold: Optional[float] = None
    rng_seed: int = 1
    backend: str = "mgs"
    perturb_factor: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.growth_threshold is not None and not self.growth_threshold > 0.0:
            raise ValueError(f"growth_threshold must be positive, got {self.growth_threshold}")
        if self.backend not in BACKENDS:
            raise ValueError(f"Unknown backend \"{self.backend}\"")


@dataclass
class EigenvectorResult:
    """ Unit eigenvectors and per-column bookkeeping of one driver run """
    Q: np.ndarray
    iters: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    shifts: np.ndarray
    metrics: RunMetrics = field(default_factory=RunMetrics)


@dataclass
class ClusterTracker:
    """ Start index j1 of the current cluster and offset jc of the current eigenvalue """
    threshold: float
    j1: int = 0
    jc: int = 0

    @classmethod
    def for_norm(cls, tnorm: float) -> "ClusterTracker":
        """ Tracker using the 1e-3 ||T|| gap """
        return cls(threshold=CLUSTER_GAP * tnorm)

    def advance(self, j: int, lams: np.ndarray) -> bool:
        """ Move to eigenvalue j; True when it joins the cluster of j-1 """
        if j > 0 and abs(lams[j] - lams[j - 1]) <= self.threshold:
            self.jc = j - self.j1
            return True
        self.j1 = j
        self.jc = 0
        return False


def detect_cluster(lam_j: float, lam_prev: float, tnorm: float) -> bool:
    """ Whether two consecutive eigenvalues belong to the same cluster """
    return abs(lam_j - lam_prev) <= CLUSTER_GAP * tnorm


def find_clusters(lams: np.ndarray, tnorm: float) -> List[Tuple[int, int]]:
    """ Half-open index ranges of the clusters of a sorted eigenvalue list """
    tracker = ClusterTracker.for_norm(tnorm)
    clusters = []
    start = 0
    for j in range(len(lams)):
        if not tracker.advance(j, lams) and j > 0:
            clusters.append((start, j))
        start = tracker.j1
    if len(lams):
        clusters.append((start, len(lams)))
    return clusters


def perturb_degenerate(
    lams: np.ndarray,
    tnorm: float,
    n: Optional[int] = None,
    factor: float = 1.0
) -> np.ndarray:
    """ Push apart shifts closer than factor * n * eps * ||T|| so the result is strictly increasing """
    lams = np.array(lams, dtype=np.float64)
    if n is None:
        n = len(lams)
    sep = factor * n * EPS * norm_scale(tnorm)

    for j in range(1, len(lams)):
        if lams[j] - lams[j - 1] < sep:
            lams[j] = max(lams[j - 1] + sep, np.nextafter(lams[j - 1], np.inf))
    return lams


def starting_vector(n: int, seed: int, j: int, restart: int = 0) -> np.ndarray:
    """ Uniform [-1, 1) entries from a counter-based stream keyed by (seed, j, restart) """
    stream = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, j, restart])))
    return stream.uniform(-1.0, 1.0, n)


def default_growth_threshold(n: int) -> float:
    """ 1 / (100 n eps) """
    return 1.0 / (100.0 * n * EPS)


def accept_test(x: np.ndarray, n: int, cfg: InverseIterationConfig) -> bool:
    """ Whether a solve output grew enough to hold the wanted eigenvector

    x is the orthogonalized, unnormalized solve output for a unit right-hand
    side, scaled by ||T|| so the growth is dimensionless.
    """
    threshold = cfg.growth_threshold
    if threshold is None:
        threshold = default_growth_threshold(n)
    return float(np.max(np.abs(x))) >= threshold / np.sqrt(n)


class _MgsOrthogonalizer:
    """ Projects out the accepted vectors of the cluster one by one """

    def __init__(self, q, start, counters, pool):
        self.q = q
        self.start = start
        self.counters = counters
        self.pool = pool
        self.storage_words = 0

    def begin_column(self, j):
        pass

    def orthogonalize(self, x, j):
        y = mgs_project(x, self.q[:, self.start:j], self.counters, self.pool)
        norm = np.linalg.norm(y)
        if norm == 0.0 or norm < x.shape[0] * EPS * np.linalg.norm(x):
            raise DegenerateVectorError(f"Vector {j} vanished under orthogonalization", j)
        return y / norm, y

    def discard_trial(self):
        pass

    def end_column(self):
        pass


class _ReflectorOrthogonalizer:
    """ Keeps one reflector per accepted vector of the cluster plus one trial reflector """

    def __init__(self, variant, q, start, size, counters, pool):
        self.variant = variant
        self.q = q
        self.start = start
        self.size = size
        self.counters = counters
        self.pool = pool
        self.acc = None
        self.trial = False

    @property
    def storage_words(self):
        return 0 if self.acc is None else self.acc.storage_words

    def begin_column(self, j):
        if self.acc is None:
            self.acc = make_accumulator(
                self.variant, self.q.shape[0], self.size, self.pool, self.counters)

        # reflectors for accepted vectors not represented yet; normally only v_{j1}
        while self.acc.count < j - self.start:
            column = self.q[:, self.start + self.acc.count]
            u_tail = column if self.acc.count == 0 else self.acc.apply_transpose(column)
            try:
                parts = self.acc.make_reflector(u_tail, reference_norm=np.linalg.norm(column))
            except DegenerateVectorError:
                logger.warning("Column %d left no reflector; using a coordinate reflector",
                               self.start + self.acc.count)
                filler = np.zeros(u_tail.shape[0])
                filler[0] = 1.0
                parts = self.acc.make_reflector(filler)
            self.acc.append(parts)

    def orthogonalize(self, x, j):
        self.discard_trial()
        u_tail = self.acc.apply_transpose(x)
        parts = self.acc.make_reflector(u_tail, reference_norm=np.linalg.norm(x))
        self.acc.append(parts)
        self.trial = True
        return self.acc.extract(self.acc.count), u_tail

    def discard_trial(self):
        if self.trial:
            self.acc.pop()
            self.trial = False

    def end_column(self):
        self.trial = False


class _Driver:
    """ Shared machinery of the classical and the reflector-based drivers """

    def __init__(self, T, lams, cfg, pool):
        self.T = T
        self.cfg = cfg
        self.pool = pool
        self.tnorm = norm_estimate(T)
        self.scale = norm_scale(self.tnorm)
        values = np.asarray(getattr(lams, "values", lams), dtype=np.float64)
        self.shifts = perturb_degenerate(values, self.tnorm, T.n, cfg.perturb_factor)
        m = len(self.shifts)
        self.q = np.zeros((T.n, m))
        self.iters = np.zeros(m, dtype=np.int64)
        self.converged = np.zeros(m, dtype=bool)

    def make_orthogonalizer(self, start, stop, counters):
        raise NotImplementedError

    def run(self) -> EigenvectorResult:
        clusters = find_clusters(self.shifts, self.scale)

        if self.pool.threads > 1 and len(clusters) > 1:
            with ThreadPoolExecutor(max_workers=self.pool.threads) as executor:
                outcomes = list(executor.map(lambda bounds: self.solve_cluster(*bounds), clusters))
        else:
            outcomes = [self.solve_cluster(start, stop) for start, stop in clusters]

        metrics = RunMetrics()
        for counters, storage in outcomes:
            metrics.flops += counters.flops
            metrics.sync_events += counters.sync_events
            metrics.peak_storage = max(metrics.peak_storage, storage)
        metrics.cluster_sizes = [stop - start for start, stop in clusters]
        metrics.iters_histogram = dict(sorted(Counter(self.iters.tolist()).items()))
        metrics.nonconverged = int(np.count_nonzero(~self.converged))

        column_residuals = residuals(self.T, self.shifts, self.q)
        if len(column_residuals):
            metrics.max_residual = float(np.max(column_residuals)) / self.scale

        return EigenvectorResult(
            Q=self.q,
            iters=self.iters,
            residuals=column_residuals,
            converged=self.converged,
            shifts=self.shifts,
            metrics=metrics,
        )

    def solve_cluster(self, start, stop):
        """ Columns start..stop-1 in order; returns the cluster's counters and storage """
        counters = KernelCounters()
        orthogonalizer = self.make_orthogonalizer(start, stop, counters)

        for j in range(start, stop):
            if j > start:
                orthogonalizer.begin_column(j)
            vector, iters, converged = self.solve_column(j, orthogonalizer if j > start else None)
            orthogonalizer.end_column()

            self.q[:, j] = vector / np.linalg.norm(vector)
            self.iters[j] = iters
            self.converged[j] = converged
            if not converged:
                logger.warning("Eigenvector %d did not converge in %d iterations", j, iters)

        if stop - start > 1:
            logger.debug("Cluster %d..%d: %d vectors, %d sync events",
                         start, stop - 1, stop - start, counters.sync_events)
        return counters, orthogonalizer.storage_words

    def solve_column(self, j, orthogonalizer):
        """ Iterate on column j until accepted (plus one polishing step) or out of iterations """
        n = self.T.n
        factor = factor_shifted(self.T, self.shifts[j], self.tnorm)

        for restart in range(MAX_RESTARTS + 1):
            vector = starting_vector(n, self.cfg.rng_seed, j, restart)
            vector /= np.linalg.norm(vector)
            accepted = False
            try:
                for k in range(1, self.cfg.max_iters + 1):
                    x = solve_shifted(factor, vector)
                    if orthogonalizer is None:
                        growth = x
                        vector = x / np.linalg.norm(x)
                    else:
                        vector, growth = orthogonalizer.orthogonalize(x, j)
                    if accepted:
                        return vector, k, True
                    accepted = accept_test(growth * self.scale, n, self.cfg)
                return vector, self.cfg.max_iters, accepted
            except DegenerateVectorError:
                logger.debug("Eigenvector %d degenerated on start %d; restarting", j, restart)
                if orthogonalizer is not None:
                    orthogonalizer.discard_trial()

        logger.warning("Eigenvector %d stayed degenerate after %d restarts", j, MAX_RESTARTS)
        return vector, self.cfg.max_iters, False


class _ClassicalDriver(_Driver):

    def make_orthogonalizer(self, start, stop, counters):
        return _MgsOrthogonalizer(self.q, start, counters, self.pool)


class _ReflectorDriver(_Driver):

    def make_orthogonalizer(self, start, stop, counters):
        return _ReflectorOrthogonalizer(
            REFLECTOR_VARIANTS[self.cfg.backend], self.q, start, stop - start, counters, self.pool)


def classical_inverse_iteration(
    T: SymTridiagonal,
    lams,
    cfg: InverseIterationConfig,
    pool: KernelPool = SERIAL_POOL
) -> EigenvectorResult:
    """ Inverse iteration reorthogonalizing clusters by modified Gram-Schmidt """
    if cfg.backend != "mgs":
        raise ValueError(f"The classical driver needs the mgs backend, got \"{cfg.backend}\"")
    return _ClassicalDriver(T, lams, cfg, pool).run()


def cwy_inverse_iteration(
    T: SymTridiagonal,
    lams,
    cfg: InverseIterationConfig,
    pool: KernelPool = SERIAL_POOL
) -> EigenvectorResult:
    """ Inverse iteration reorthogonalizing clusters with accumulated reflectors

    One accumulator per cluster. The first vector of a cluster is kept as
    computed and only turned into the first reflector when the second vector
    starts. Each iteration replaces the trial reflector of the current vector.
    """
    if cfg.backend not in REFLECTOR_VARIANTS:
        raise ValueError(
            f"The reflector driver needs a householder or cwy backend, got \"{cfg.backend}\"")
    return _ReflectorDriver(T, lams, cfg, pool).run()


def inverse_iteration(
    T: SymTridiagonal,
    lams,
    cfg: InverseIterationConfig,
    pool: KernelPool = SERIAL_POOL
) -> EigenvectorResult:
    """ Run the driver matching cfg.backend """
    if cfg.backend == "mgs":
        return classical_inverse_iteration(T, lams, cfg, pool)
    return cwy_inverse_iteration(T, lams, cfg, pool)
