""" Run metrics and the quality measures shared by the drivers and the reports """
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional

import numpy as np

from .tridiag import SymTridiagonal, matvec, norm_estimate, norm_scale

if TYPE_CHECKING:
    from .bench import VerificationSummary


@dataclass
class RunMetrics:
    """ Cost and quality figures of one inverse-iteration run

    `flops` and `sync_events` cover the orthogonalization kernels only.
    `max_residual` is scaled by ||T||.
    """
    wall_time: float = 0.0
    flops: int = 0
    sync_events: int = 0
    max_orth_dev: float = 0.0
    max_residual: float = 0.0
    iters_histogram: Dict[int, int] = field(default_factory=dict)
    cluster_sizes: List[int] = field(default_factory=list)
    nonconverged: int = 0
    peak_storage: int = 0
    verification: Optional["VerificationSummary"] = None

    @property
    def max_cluster(self) -> int:
        """ Size of the largest cluster, 0 before any run """
        return max(self.cluster_sizes, default=0)


def orthogonality_deviation(q: np.ndarray) -> float:
    """ max |Q^T Q - I| over all entries """
    q = np.asarray(q, dtype=np.float64)
    if q.shape[1] == 0:
        return 0.0
    gram = q.T @ q
    gram[np.diag_indices_from(gram)] -= 1.0
    return float(np.max(np.abs(gram)))


def residuals(T: SymTridiagonal, lams: np.ndarray, q: np.ndarray) -> np.ndarray:
    """ ||T q_j - lam_j q_j||_inf for every column """
    q = np.asarray(q, dtype=np.float64)
    if q.shape[0] != T.n or q.shape[1] != len(lams):
        raise ValueError(
            f"Dimension mismatch: matrix is {T.n}, Q is {q.shape}, {len(lams)} eigenvalues")
    return np.max(np.abs(matvec(T, q) - q * np.asarray(lams)[None, :]), axis=0)


def scaled_residuals(T: SymTridiagonal, lams: np.ndarray, q: np.ndarray) -> np.ndarray:
    """ residuals() divided by ||T|| (by 1 for the zero matrix) """
    return residuals(T, lams, q) / norm_scale(norm_estimate(T))
