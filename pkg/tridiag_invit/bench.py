""" Experiment pipeline: generate a matrix, bisect, run inverse iteration, measure and report """
import csv
import logging
import os
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal, subspace_angles

from .invit import BACKENDS, EigenvectorResult, InverseIterationConfig, find_clusters, inverse_iteration
from .kernels import KernelPool
from .matgen import MatrixSpec
from .metrics import RunMetrics, orthogonality_deviation, scaled_residuals
from .spectrum import EigenvalueEstimates, bisect_eigenvalues
from .tridiag import EPS, SymTridiagonal, norm_estimate, norm_scale

logger = logging.getLogger(__name__)

CSV_FIELDS = (
    "family",
    "n",
    "backend",
    "threads",
    "seed",
    "wall_s",
    "flops",
    "sync_events",
    "max_orth_dev",
    "max_residual",
    "nonconverged",
    "max_cluster",
)

MGS_ORTH_THRESHOLD = 1e-8
ANGLE_THRESHOLD = 1e-8


@dataclass(frozen=True)
class RunConfig:
    """ Everything one experiment needs; `seed` feeds both the matrix and the starting vectors """
    matrix: MatrixSpec
    backend: str = "cwy_packed"
    threads: int = 1
    seed: int = 1
    output_path: Optional[str] = None
    verify: bool = False
    tol: Optional[float] = None
    max_iters: int = 5
    growth_threshold: Optional[float] = None
    perturb_factor: float = 1.0

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError(f"Thread count must be at least 1, got {self.threads}")
        if self.backend not in BACKENDS:
            raise ValueError(f"Unknown backend \"{self.backend}\"")
        if self.tol is not None and not self.tol > 0.0:
            raise ValueError(f"Tolerance must be positive, got {self.tol}")

    @classmethod
    def from_mapping(cls, config: Mapping) -> "RunConfig":
        """ Build from an app config (FAMILY, N, BLOCKS, DELTA, SEED, ...) """
        family = config["FAMILY"]
        size = config["BLOCKS"] if family == "glued_wilkinson" else config["N"]
        matrix = MatrixSpec(family, int(size), seed=int(config["SEED"]), delta=float(config["DELTA"]))
        return cls(
            matrix=matrix,
            backend=config["BACKEND"],
            threads=int(config["THREADS"]),
            seed=int(config["SEED"]),
            output_path=config.get("OUTPUT_PATH"),
            verify=bool(config.get("VERIFY", False)),
            tol=config.get("TOL"),
            max_iters=int(config.get("MAX_ITERS", 5)),
            growth_threshold=config.get("GROWTH_THRESHOLD"),
            perturb_factor=float(config.get("PERTURB_FACTOR", 1.0)),
        )

    def with_backend(self, backend: str) -> "RunConfig":
        return replace(self, backend=backend)

    def with_size(self, size: int) -> "RunConfig":
        return replace(self, matrix=replace(self.matrix, n=size))

    def invit_config(self) -> InverseIterationConfig:
        return InverseIterationConfig(
            max_iters=self.max_iters,
            growth_threshold=self.growth_threshold,
            rng_seed=self.seed,
            backend=self.backend,
            perturb_factor=self.perturb_factor,
        )


@dataclass
class VerificationSummary:
    """ Quality figures of a computed eigenvector set and the thresholds they were held to """
    max_orth_dev: float
    max_scaled_residual: float
    orth_threshold: float
    residual_threshold: float
    nonconverged: int = 0
    max_principal_angle: Optional[float] = None
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class Experiment:
    """ Inputs and outputs of one pipeline run """
    config: RunConfig
    matrix: SymTridiagonal
    eigenvalues: EigenvalueEstimates
    result: EigenvectorResult

    @property
    def metrics(self) -> RunMetrics:
        return self.result.metrics


@dataclass
class ComparisonRow:
    backend: str
    metrics: RunMetrics
    max_angle_to_first: float = 0.0


@dataclass
class ComparisonReport:
    """ The same matrix and seed run through several backends; ratios are against the first """
    family: str
    n: int
    threads: int
    rows: List[ComparisonRow]

    def speedup(self, backend: str) -> float:
        """ t / t_backend with t the wall time of the first backend """
        base = self.rows[0].metrics.wall_time
        other = self.row(backend).metrics.wall_time
        return base / other if other > 0.0 else float("inf")

    def row(self, backend: str) -> ComparisonRow:
        for row in self.rows:
            if row.backend == backend:
                return row
        raise KeyError(backend)


def verification_thresholds(backend: str, n: int) -> Tuple[float, float]:
    """ (orthogonality, scaled residual) bounds a healthy run of `backend` stays within """
    orth = MGS_ORTH_THRESHOLD if backend == "mgs" else 100.0 * n * EPS
    return orth, 1e3 * n * EPS


def dense_reference(T: SymTridiagonal, m: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """ Eigenvalues and eigenvectors of the m smallest eigenpairs from LAPACK """
    if m is None:
        m = T.n
    if T.n == 1:
        return np.array(T.diag), np.ones((1, 1))
    values, vectors = eigh_tridiagonal(
        np.asarray(T.diag), np.asarray(T.offdiag), select="i", select_range=(0, m - 1))
    return values, vectors


def cluster_angles(
    q: np.ndarray,
    reference: np.ndarray,
    clusters: Iterable[Tuple[int, int]]
) -> float:
    """ Largest principal angle between matching cluster subspaces of two eigenvector sets """
    worst = 0.0
    for start, stop in clusters:
        angles = subspace_angles(q[:, start:stop], reference[:, start:stop])
        worst = max(worst, float(np.max(angles)))
    return worst


def verify_result(
    T: SymTridiagonal,
    lams: np.ndarray,
    q: np.ndarray,
    reference: Optional[np.ndarray] = None,
    backend: str = "cwy_packed",
    converged: Optional[np.ndarray] = None
) -> VerificationSummary:
    """ Check orthogonality and residuals, and subspaces against `reference` when given """
    lams = np.asarray(getattr(lams, "values", lams), dtype=np.float64)
    if q.shape != (T.n, len(lams)):
        raise ValueError(
            f"Dimension mismatch: matrix is {T.n}, Q is {q.shape}, {len(lams)} eigenvalues")

    orth_threshold, residual_threshold = verification_thresholds(backend, T.n)
    summary = VerificationSummary(
        max_orth_dev=orthogonality_deviation(q),
        max_scaled_residual=float(np.max(scaled_residuals(T, lams, q), initial=0.0)),
        orth_threshold=orth_threshold,
        residual_threshold=residual_threshold,
    )

    if summary.max_orth_dev > orth_threshold:
        summary.failures.append(
            f"orthogonality {summary.max_orth_dev:.3e} exceeds {orth_threshold:.3e}")
    if summary.max_scaled_residual > residual_threshold:
        summary.failures.append(
            f"scaled residual {summary.max_scaled_residual:.3e} exceeds {residual_threshold:.3e}")

    if converged is not None:
        summary.nonconverged = int(np.count_nonzero(~np.asarray(converged)))
        if summary.nonconverged:
            summary.failures.append(f"{summary.nonconverged} eigenvectors did not converge")

    if reference is not None:
        if reference.shape != q.shape:
            raise ValueError(f"Reference shape {reference.shape} does not match Q {q.shape}")
        summary.max_principal_angle = cluster_angles(
            q, reference, find_clusters(lams, norm_scale(norm_estimate(T))))
        if summary.max_principal_angle > ANGLE_THRESHOLD:
            summary.failures.append(
                f"cluster subspace angle {summary.max_principal_angle:.3e} "
                f"exceeds {ANGLE_THRESHOLD:.0e}")

    return summary


def run_pipeline(cfg: RunConfig) -> Experiment:
    """ Generate, bisect, time the inverse iteration, fill in the metrics and append a CSV row """
    matrix = cfg.matrix.build()
    eigenvalues = bisect_eigenvalues(matrix, tol=cfg.tol)
    logger.debug("Bisection done for %s n=%d", cfg.matrix.family, matrix.n)

    with KernelPool(cfg.threads) as pool:
        start = time.perf_counter()
        result = inverse_iteration(matrix, eigenvalues, cfg.invit_config(), pool)
        wall_time = time.perf_counter() - start

    metrics = result.metrics
    metrics.wall_time = wall_time
    metrics.max_orth_dev = orthogonality_deviation(result.Q)

    if cfg.verify:
        _, reference = dense_reference(matrix)
        metrics.verification = verify_result(
            matrix, result.shifts, result.Q, reference, cfg.backend, result.converged)

    experiment = Experiment(cfg, matrix, eigenvalues, result)
    if cfg.output_path:
        write_csv_rows(cfg.output_path, [csv_row(experiment)])
    return experiment


def run_experiment(cfg: RunConfig) -> RunMetrics:
    """ Metrics of one pipeline run """
    return run_pipeline(cfg).metrics


def compare_backends(cfg_base: RunConfig, backends: Sequence[str]) -> ComparisonReport:
    """ Run every backend on the identical matrix and seed """
    if len(backends) < 2:
        raise ValueError("Comparing needs at least two backends")

    experiments = [run_pipeline(cfg_base.with_backend(backend)) for backend in backends]
    first = experiments[0]
    clusters = find_clusters(first.result.shifts, norm_scale(norm_estimate(first.matrix)))

    rows = []
    for experiment in experiments:
        angle = cluster_angles(experiment.result.Q, first.result.Q, clusters)
        rows.append(ComparisonRow(experiment.config.backend, experiment.metrics, angle))

    return ComparisonReport(
        family=cfg_base.matrix.family,
        n=first.matrix.n,
        threads=cfg_base.threads,
        rows=rows,
    )


def sweep_sizes(
    cfg_base: RunConfig,
    sizes: Sequence[int],
    backends: Sequence[str] = ("mgs", "cwy_packed")
) -> List[ComparisonReport]:
    """ compare_backends for each matrix size """
    return [compare_backends(cfg_base.with_size(size), backends) for size in sizes]


def csv_row(experiment: Experiment) -> dict:
    metrics = experiment.metrics
    return {
        "family": experiment.config.matrix.family,
        "n": experiment.matrix.n,
        "backend": experiment.config.backend,
        "threads": experiment.config.threads,
        "seed": experiment.config.seed,
        "wall_s": f"{metrics.wall_time:.6f}",
        "flops": metrics.flops,
        "sync_events": metrics.sync_events,
        "max_orth_dev": f"{metrics.max_orth_dev:.6e}",
        "max_residual": f"{metrics.max_residual:.6e}",
        "nonconverged": metrics.nonconverged,
        "max_cluster": metrics.max_cluster,
    }


def write_csv_rows(path: str, rows: Iterable[dict]):
    """ Append rows, writing the header first if the file is new or empty """
    needs_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, mode="a", newline="", encoding="utf-8") as csv_file:
        writer = csv.DictWriter(csv_file, fieldnames=CSV_FIELDS, lineterminator="\n")
        if needs_header:
            writer.writeheader()
        writer.writerows(rows)


def format_summary(cfg: RunConfig, metrics: RunMetrics) -> str:
    lines = [
        f"{cfg.matrix.family} n={cfg.matrix.dimension} backend={cfg.backend} threads={cfg.threads}",
        f"  wall time      {metrics.wall_time:.4f} s",
        f"  flops          {metrics.flops}",
        f"  sync events    {metrics.sync_events}",
        f"  max |QtQ - I|  {metrics.max_orth_dev:.3e}",
        f"  max residual   {metrics.max_residual:.3e} (scaled by ||T||)",
        f"  clusters       {len(metrics.cluster_sizes)} (largest {metrics.max_cluster})",
        f"  peak storage   {metrics.peak_storage} words",
        "  iterations     " + ", ".join(
            f"{iters}: {count}" for iters, count in metrics.iters_histogram.items()),
        f"  nonconverged   {metrics.nonconverged}",
    ]

    summary = metrics.verification
    if summary is not None:
        if summary.max_principal_angle is not None:
            lines.append(f"  max angle      {summary.max_principal_angle:.3e} (dense reference)")
        lines.append("  verification   " + ("passed" if summary.passed else "FAILED"))
        lines.extend(f"    {failure}" for failure in summary.failures)
    return "\n".join(lines)


def _ratio(numerator: float, denominator: float) -> str:
    return f"{numerator / denominator:.3f}" if denominator else "-"


def format_comparison(report: ComparisonReport) -> str:
    base = report.rows[0].metrics
    header = (f"{'backend':<14}{'wall_s':>12}{'flops':>16}{'sync':>10}{'orth_dev':>12}"
              f"{'t/t_x':>9}{'flops_x/f':>11}{'sync_x/s':>10}{'angle':>11}")
    lines = [f"{report.family} n={report.n} threads={report.threads}", header]
    for row in report.rows:
        metrics = row.metrics
        lines.append(
            f"{row.backend:<14}{metrics.wall_time:>12.4f}{metrics.flops:>16}"
            f"{metrics.sync_events:>10}{metrics.max_orth_dev:>12.2e}"
            f"{_ratio(base.wall_time, metrics.wall_time):>9}"
            f"{_ratio(metrics.flops, base.flops):>11}"
            f"{_ratio(metrics.sync_events, base.sync_events):>10}"
            f"{row.max_angle_to_first:>11.2e}"
        )
    return "\n".join(lines)


def format_sweep(reports: Sequence[ComparisonReport]) -> str:
    """ Rows of n, t, t_cwy and t/t_cwy, first backend against the last """
    if not reports:
        return ""
    first = reports[0].rows[0].backend
    last = reports[0].rows[-1].backend
    lines = [f"{'n':>8}{'t (' + first + ')':>22}{'t (' + last + ')':>22}{'t/t_cwy':>10}"]
    for report in reports:
        base = report.row(first).metrics.wall_time
        other = report.row(last).metrics.wall_time
        lines.append(f"{report.n:>8}{base:>22.4f}{other:>22.4f}{_ratio(base, other):>10}")
    return "\n".join(lines)
