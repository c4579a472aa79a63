"""Reconstructability analysis: when does a capture setup pin down motion?

For a single moving point observed once per frame, perturbing every depth by
l_f and requiring the perturbed structure to keep the same self-expression
residual leads to a linear system A l = b with

    A[f, j] = (Q Q^T)[f, j] * (r_j . r_f),      Q = I - W,
    b[f]    = r_f^T  X* Q Q^T e_f,

so A is the Hadamard product of two positive semidefinite matrices (hence
symmetric PSD itself).  The magnitude of l and the conditioning of A say how
strongly the viewing geometry and the weight pattern constrain the
reconstruction; 1/sigma_min(A) is reported as the system condition.

The filter view: fixing W to the pattern of a high-pass filter bank turns
the self-expression residual into a classic temporal-smoothness objective,
which is the baseline the solver is compared against.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "ReconstructabilityReport",
    "ErrorSolution",
    "build_system",
    "error_vector",
    "system_condition",
    "residual",
    "FilterBank",
    "filter_weights",
    "analyze_point",
    "analyze_scene",
]


@dataclass
class ErrorSolution:
    """Solution of A l = b with norm, bound and conditioning diagnostics."""

    l: np.ndarray
    l_norm: float
    error_bound: float
    condition: float
    least_norm: bool


@dataclass
class ReconstructabilityReport:
    """Per-point analysis output."""

    a_matrix: np.ndarray
    b_vector: np.ndarray
    error_vector: np.ndarray
    system_condition: float
    error_bound: float
    residual_per_point: float
    least_norm: bool


def build_system(ray_dirs, weights, ground_truth=None):
    """Assemble the analysis system (A, b) for a single point.

    Parameters
    ----------
    ray_dirs : (F, 3) array
        Unit viewing-ray direction of the point in every frame.
    weights : (F, F) array
        Coefficient matrix W.
    ground_truth : (3, F) array, optional
        True positions of the point per frame.  Without them only A can be
        formed and b comes back None (conditioning-only analysis).

    Returns
    -------
    (A, b) with A of shape (F, F) and b of shape (F,) or None.
    """
    R = np.asarray(ray_dirs, dtype=float)
    W = np.asarray(weights, dtype=float)
    F = R.shape[0]
    if R.shape != (F, 3):
        raise InputError(f"ray_dirs must be (F, 3), got {R.shape}")
    if W.shape != (F, F):
        raise InputError(f"weights shape {W.shape} does not match F={F}")
    if not np.isfinite(R).all():
        raise InputError("ray directions must be finite for every frame")
    Q = np.eye(F) - W
    S = Q @ Q.T
    A = S * (R @ R.T)
    if ground_truth is None:
        return A, None
    X = np.asarray(ground_truth, dtype=float)
    if X.shape != (3, F):
        raise InputError(
            f"ground_truth must be (3, F) for single-point analysis, got {X.shape}"
        )
    b = np.einsum("fa,af->f", R, X @ S)
    return A, b


def system_condition(a_matrix):
    """1/sigma_min(A), infinite past the 1e-12 relative singular cutoff."""
    s = np.linalg.svd(np.asarray(a_matrix, dtype=float), compute_uv=False)
    smax = float(s[0])
    smin = float(s[-1])
    if smax == 0.0 or smin < 1e-12 * smax:
        return math.inf
    return 1.0 / smin


def error_vector(a_matrix, b_vector):
    """Solve A l = b and report the bound diagnostics.

    Near-singular systems (relative sigma_min below 1e-12) fall back to the
    least-norm solution and are flagged; their condition and error bound are
    infinite (the bound degenerates to 0 * inf = 0 when b = 0, reported as 0).
    """
    A = np.asarray(a_matrix, dtype=float)
    b = np.asarray(b_vector, dtype=float)
    cond = system_condition(A)
    if math.isfinite(cond):
        l = np.linalg.solve(A, b)
        least_norm = False
    else:
        l = np.linalg.lstsq(A, b, rcond=None)[0]
        least_norm = True
    b_norm = float(np.linalg.norm(b))
    bound = cond * b_norm if b_norm > 0 else 0.0
    return ErrorSolution(
        l=l,
        l_norm=float(np.linalg.norm(l)),
        error_bound=bound,
        condition=cond,
        least_norm=least_norm,
    )


def residual(ground_truth, weights):
    """Self-expression residual per point, (1/PF) ||X (I - W)||_F."""
    X = np.asarray(ground_truth, dtype=float)
    W = np.asarray(weights, dtype=float)
    F = X.shape[1]
    if X.shape[0] % 3 != 0:
        raise InputError("ground truth must have 3P rows")
    P = X.shape[0] // 3
    Q = np.eye(F) - W
    return float(np.linalg.norm(X @ Q)) / (P * F)


@dataclass
class FilterBank:
    """Banded filter operator G and, for the two named taps, the W pattern."""

    taps: np.ndarray
    g_matrix: np.ndarray
    w_matrix: np.ndarray = None


def filter_weights(filter_taps, frame_count):
    """Banded high-pass operator for a tap list, plus W when one exists.

    The returned G is F x (F - M + 1); column c applies the reversed taps to
    frames c..c+M-1, so ||X G||^2 sums the filter response over all interior
    positions.  For taps [1, -1] the equivalent coefficient matrix has ones
    on the subdiagonal (boundary column zero); for [-1, 2, -1] the interior
    columns put 0.5 on each temporal neighbor.  Other taps return G only.
    """
    taps = np.asarray(filter_taps, dtype=float)
    M = taps.size
    if M < 2:
        raise InputError(f"need at least 2 filter taps, got {M}")
    F = int(frame_count)
    if F <= M:
        raise InputError(f"frame count {F} must exceed tap count {M}")
    G = np.zeros((F, F - M + 1))
    rev = taps[::-1]
    for c in range(F - M + 1):
        G[c : c + M, c] = rev
    W = None
    if np.array_equal(taps, [1.0, -1.0]):
        W = np.zeros((F, F))
        for i in range(F - 1):
            W[i + 1, i] = 1.0
    elif np.array_equal(taps, [-1.0, 2.0, -1.0]):
        W = np.zeros((F, F))
        for c in range(1, F - 1):
            W[c - 1, c] = 0.5
            W[c + 1, c] = 0.5
    return FilterBank(taps=taps, g_matrix=G, w_matrix=W)


def analyze_point(ray_dirs, weights, ground_truth_point=None):
    """Full reconstructability report for one point.

    Without ground truth the report carries the conditioning of A only
    (b, l, bound and residual come back None).
    """
    A, b = build_system(ray_dirs, weights, ground_truth_point)
    if b is None:
        return ReconstructabilityReport(
            a_matrix=A,
            b_vector=None,
            error_vector=None,
            system_condition=system_condition(A),
            error_bound=None,
            residual_per_point=None,
            least_norm=False,
        )
    sol = error_vector(A, b)
    return ReconstructabilityReport(
        a_matrix=A,
        b_vector=b,
        error_vector=sol.l,
        system_condition=sol.condition,
        error_bound=sol.error_bound,
        residual_per_point=residual(ground_truth_point, weights),
        least_norm=sol.least_norm,
    )


def analyze_scene(rays, weights, ground_truth=None):
    """Per-point reconstructability reports for a multi-point scene.

    The analysis contract is one point per shape, so a P-point scene is
    analyzed point by point against the shared weight matrix.  Every
    analyzed point must be observed in all frames.
    """
    P = rays.present.shape[0]
    X = None
    if ground_truth is not None:
        X = np.asarray(ground_truth, dtype=float)
        if X.shape[0] != 3 * P:
            raise InputError(
                f"ground truth rows {X.shape[0]} do not match {P} points"
            )
    reports = []
    for p in range(P):
        if not rays.present[p].all():
            raise InputError(
                f"point {p} is not observed in every frame; analysis needs "
                "complete rays"
            )
        point_truth = None if X is None else X[3 * p : 3 * p + 3, :]
        reports.append(analyze_point(rays.directions[p], weights, point_truth))
    return reports
