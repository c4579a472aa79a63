"""Alternating biconvex solver for self-expressive structure recovery.

The unknowns are the structure matrix X (3P x F) and the weight matrix W
(F x F, masked simplex columns).  The cost is

    (1/FP) ||X - X W||_F^2  +  lambda1 * psi1(W)  +  lambda2 * psi2(X)
                            [ +  lambda3 * sum ||(I - r r^T)(X - C)||^2 ]

with psi1 = (1/F) ||W - W^T||_F^2 penalizing asymmetric dependence,
psi2 the mean squared displacement between consecutive frames of the same
video, and the bracketed soft-ray term active only for finite lambda3.  With
lambda3 infinite each observed point is pinned to its viewing ray,
X = C + d r, and the free variables are the depths d (plus fully free 3D
points where observations are missing).

Both block updates are exact descent steps, so the objective trace is
non-increasing across X-steps and W-steps.  The W update runs ADMM with a
closed-form auxiliary step; the X update solves small per-point linear
systems.  The full solve warms up with a decoupled coding/refit loop that
pulls the depth initialization into the self-expressive basin, then runs
the coupled alternation; a second stage repeats it with lambda2 = 0, warm
started, so the smoothness prior guides early iterations without biasing
the final structure.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleError, InputError
from .geometry import (
    assemble_structure,
    compute_rays,
    frame_centers,
    frame_video_ids,
    structure_to_points,
    validate_frames,
)
from .simplex import minimize_on_simplex, self_express, support_mask, validate_mask

__all__ = [
    "SolverConfig",
    "SolveState",
    "video_pairs",
    "smoothness_operator",
    "psi1",
    "psi2",
    "soft_ray_cost",
    "objective",
    "coupling_matrix",
    "minimize_structure",
    "x_step",
    "admm_w_step",
    "pair_distance_matrix",
    "initialize_depths",
    "normalize_scale",
    "solve",
]


@dataclass
class SolverConfig:
    """Weights, tolerances and switches for the alternating solver.

    lambda3 is the soft-ray weight; ``math.inf`` (the default) keeps points
    exactly on their viewing rays, while a finite value (100 is the usual
    choice for noisy pixels) lets them move off the rays.
    """

    lambda1: float = 0.05
    lambda2: float = 0.1
    lambda3: float = math.inf
    rho: float = 1.0
    adapt_rho: bool = False
    outer_max: int = 100
    outer_rel_tol: float = 1e-6
    admm_abs_tol: float = 1e-5
    admm_rel_tol: float = 1e-4
    admm_max_iter: int = 500
    consensus_tol: float = 1e-4
    same_video_exclusion: bool = True
    second_stage: bool = True
    seed: int = 0

    def validate(self):
        for name in ("lambda1", "lambda2"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be nonnegative")
        if not self.lambda3 > 0:
            raise InputError("lambda3 must be positive (inf = hard constraint)")
        if not self.rho > 0:
            raise InputError("rho must be positive")
        for name in (
            "outer_rel_tol",
            "admm_abs_tol",
            "admm_rel_tol",
            "consensus_tol",
        ):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.outer_max < 1 or self.admm_max_iter < 1:
            raise InputError("iteration caps must be at least 1")


@dataclass
class SolveState:
    """Result of a solver run (or an intermediate snapshot)."""

    structure: np.ndarray
    depths: np.ndarray
    weights: np.ndarray
    dual: np.ndarray
    auxiliary: np.ndarray
    objective_trace: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    scale_factor: float = 1.0
    outer_iterations: int = 0
    admm_iterations: int = 0
    converged: bool = False


def video_pairs(frames):
    """Global-index pairs of temporally consecutive frames within each video.

    Returns an (M, 2) int array; M = sum over videos of (frames - 1).
    """
    by_video = {}
    for frame in frames:
        by_video.setdefault(frame.video_id, []).append(
            (frame.frame_in_video, frame.global_index)
        )
    pairs = []
    for vid in sorted(by_video):
        seq = sorted(by_video[vid])
        for (_, a), (_, b) in zip(seq, seq[1:]):
            pairs.append((a, b))
    return np.array(pairs, dtype=int).reshape(-1, 2)


def smoothness_operator(frames):
    """F x M difference operator T with columns e_a - e_b per video pair."""
    pairs = video_pairs(frames)
    F = len(frames)
    T = np.zeros((F, pairs.shape[0]))
    for m, (a, b) in enumerate(pairs):
        T[a, m] = 1.0
        T[b, m] = -1.0
    return T


def psi1(weights):
    """Asymmetry penalty (1/F) ||W - W^T||_F^2."""
    W = np.asarray(weights, dtype=float)
    return float(np.sum((W - W.T) ** 2)) / W.shape[0]


def psi2(structure, frames):
    """Mean squared shape displacement between consecutive same-video frames.

    Defined as 0 (with a warning) when every video has a single frame.
    """
    pairs = video_pairs(frames)
    if pairs.shape[0] == 0:
        warnings.warn("psi2 undefined with single-frame videos; returning 0")
        return 0.0
    X = np.asarray(structure, dtype=float)
    diffs = X[:, pairs[:, 0]] - X[:, pairs[:, 1]]
    return float(np.sum(diffs**2)) / pairs.shape[0]


def soft_ray_cost(structure, rays):
    """Sum of squared point-to-ray distances over present observations."""
    P, F = rays.present.shape
    points = structure_to_points(structure, P)
    rel = points - rays.centers[None, :, :]
    along = np.einsum("pfa,pfa->pf", rel, rays.directions)
    sq = np.einsum("pfa,pfa->pf", rel, rel) - along**2
    return float(np.clip(sq[rays.present], 0.0, None).sum())


def objective(structure, weights, config, frames, rays=None):
    """Full cost and its separate terms.

    Returns (total, terms) where terms has keys ``self_expression``,
    ``psi1``, ``psi2`` and ``soft_ray``.  The soft-ray term is only computed
    (and requires ``rays``) when lambda3 is finite.
    """
    X = np.asarray(structure, dtype=float)
    W = np.asarray(weights, dtype=float)
    F = X.shape[1]
    P = X.shape[0] // 3
    terms = {
        "self_expression": float(np.sum((X - X @ W) ** 2)) / (F * P),
        "psi1": psi1(W),
        "psi2": psi2(X, frames),
        "soft_ray": 0.0,
    }
    total = (
        terms["self_expression"]
        + config.lambda1 * terms["psi1"]
        + config.lambda2 * terms["psi2"]
    )
    if math.isfinite(config.lambda3):
        if rays is None:
            raise InputError("finite lambda3 requires the ray field")
        terms["soft_ray"] = soft_ray_cost(X, rays)
        total += config.lambda3 * terms["soft_ray"]
    return total, terms


def coupling_matrix(weights, config, frames, point_count):
    """F x F coupling Mc so the structure cost is sum_p tr(X_p Mc X_p^T).

    Mc = (1/FP) (I - W)(I - W)^T + (lambda2 / M) T T^T, with the smoothness
    part dropped when lambda2 = 0 or no video has consecutive frames.
    """
    W = np.asarray(weights, dtype=float)
    F = W.shape[0]
    Q = np.eye(F) - W
    Mc = (Q @ Q.T) / (F * point_count)
    if config.lambda2 > 0:
        T = smoothness_operator(frames)
        if T.shape[1] > 0:
            Mc = Mc + (config.lambda2 / T.shape[1]) * (T @ T.T)
    return Mc


def _solve_regularized(H, rhs, flags, label):
    # direct solve with a trace-scaled ridge retry on singular systems
    n = H.shape[0]
    scale = float(np.trace(H)) / n
    try:
        sol = np.linalg.solve(H, rhs)
        resid = np.linalg.norm(H @ sol - rhs)
        if np.isfinite(sol).all() and resid <= 1e-8 * (
            1.0 + np.linalg.norm(rhs) + abs(scale) * np.linalg.norm(sol)
        ):
            return sol
    except np.linalg.LinAlgError:
        pass
    eps = 1e-10 * max(abs(scale), 1e-300)
    flags.append(f"ridge:{label}")
    try:
        return np.linalg.solve(H + eps * np.eye(n), rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(H + eps * np.eye(n), rhs, rcond=None)[0]


def minimize_structure(coupling, rays, lambda3=math.inf, flags=None):
    """Exactly minimize sum_p tr(X_p Mc X_p^T) (+ soft-ray term) per point.

    With infinite lambda3, observed points are constrained to their rays
    (X = C + d r) and missing points are free 3D unknowns; with finite
    lambda3 every point is free and the ray attachment enters as a
    penalty with projector I - r r^T.  Either way each point solves one
    symmetric linear system.

    Returns (structure, depths); ``flags`` collects ridge warnings.
    """
    if flags is None:
        flags = []
    Mc = np.asarray(coupling, dtype=float)
    P, F = rays.present.shape
    centers = rays.centers
    structure = np.empty((3 * P, F))
    depths = np.full((P, F), np.nan)

    for p in range(P):
        pres = rays.present[p]
        if math.isinf(lambda3):
            Xp, dp = _hard_point(Mc, rays.directions[p], centers, pres, flags, p)
        else:
            Xp, dp = _soft_point(
                Mc, rays.directions[p], centers, pres, lambda3, flags, p
            )
        structure[3 * p : 3 * p + 3, :] = Xp
        depths[p, pres] = dp
    return structure, depths


def _hard_point(Mc, dirs, centers, pres, flags, p):
    F = pres.size
    C = centers.T
    if pres.all():
        R = dirs.T
        H = (R.T @ R) * Mc
        rhs = -np.einsum("af,af->f", R, C @ Mc)
        d = _solve_regularized(H, rhs, flags, f"hard-point-{p}")
        return C + R * d, d

    obs = np.flatnonzero(pres)
    mis = np.flatnonzero(~pres)
    no, nm = obs.size, mis.size
    Ro = dirs[obs].T
    Co = centers[obs]
    Mc_oo = Mc[np.ix_(obs, obs)]
    Mc_om = Mc[np.ix_(obs, mis)]
    Mc_mm = Mc[np.ix_(mis, mis)]

    H = np.empty((no + 3 * nm, no + 3 * nm))
    H[:no, :no] = (Ro.T @ Ro) * Mc_oo
    H_dx = (Mc_om[:, :, None] * Ro.T[:, None, :]).reshape(no, 3 * nm)
    H[:no, no:] = H_dx
    H[no:, :no] = H_dx.T
    H[no:, no:] = np.kron(Mc_mm, np.eye(3))
    rhs = np.empty(no + 3 * nm)
    rhs[:no] = -np.einsum("ia,ia->i", Ro.T, Mc_oo @ Co)
    rhs[no:] = -(Mc_om.T @ Co).reshape(-1)
    sol = _solve_regularized(H, rhs, flags, f"hard-missing-point-{p}")

    d = sol[:no]
    Xp = np.empty((3, F))
    Xp[:, obs] = Co.T + Ro * d
    Xp[:, mis] = sol[no:].reshape(nm, 3).T
    return Xp, d


def _soft_point(Mc, dirs, centers, pres, lambda3, flags, p):
    F = pres.size
    A = np.kron(Mc, np.eye(3))
    rhs = np.zeros(3 * F)
    for f in np.flatnonzero(pres):
        r = dirs[f]
        proj = np.eye(3) - np.outer(r, r)
        A[3 * f : 3 * f + 3, 3 * f : 3 * f + 3] += lambda3 * proj
        rhs[3 * f : 3 * f + 3] = lambda3 * (proj @ centers[f])
    sol = _solve_regularized(A, rhs, flags, f"soft-point-{p}")
    Xp = sol.reshape(F, 3).T
    rel = Xp[:, pres] - centers[pres].T
    d = np.einsum("af,af->f", rel, dirs[pres].T)
    return Xp, d


def x_step(structure, weights, config, rays, frames, flags=None):
    """One exact structure update for fixed weights.

    Returns (structure, depths, flags).  Minimizes the objective over the
    free structure variables; the resulting objective never exceeds the
    previous one.
    """
    if flags is None:
        flags = []
    P = rays.present.shape[0]
    Mc = coupling_matrix(weights, config, frames, P)
    new_structure, depths = minimize_structure(
        Mc, rays, lambda3=config.lambda3, flags=flags
    )
    return new_structure, depths, flags


def _decoupled_weights(G, cols_allowed):
    F = G.shape[0]
    W = np.zeros((F, F))
    for f in range(F):
        idx = cols_allowed[f]
        W[idx, f] = minimize_on_simplex(G[np.ix_(idx, idx)], -2.0 * G[idx, f])
    return W


def _masked_simplex_project(V, allowed):
    # column-wise Euclidean projection onto the masked probability simplex;
    # forbidden entries are sunk below any reachable threshold so the sorted
    # prefix logic never selects them
    F = V.shape[0]
    sunk = np.where(allowed, V, -1e30)
    U = np.sort(sunk, axis=0)[::-1]
    css = np.cumsum(U, axis=0) - 1.0
    ks = np.arange(1, F + 1)[:, None]
    sizes = (U - css / ks > 0.0).sum(axis=0)
    theta = css[sizes - 1, np.arange(V.shape[1])] / sizes
    W = np.clip(V - theta[None, :], 0.0, None)
    W[~allowed] = 0.0
    return W


def admm_w_step(structure, mask, config, weights=None, auxiliary=None, dual=None):
    """ADMM update of the weight matrix for fixed structure.

    Splits the masked-simplex data term (carried by W) from the asymmetry
    penalty (carried by the auxiliary Z) under the consensus W = Z.  Step 1
    solves one masked simplex QP per column, step 2 has the closed form

        Z = sym(B)/rho + skew(B)/(8 lambda1 / F + rho),   B = Y + rho W,

    and step 3 is the dual ascent Y += rho (W - Z).  On the first call
    (weights None) W and Z start from the decoupled per-column coding and
    Y = 0; later calls hot-start from the previous triplet.

    Step 1 runs projected gradient on all columns at once: the proximal
    Hessian (1/FP) G + (rho/2) I is dominated by its rho I part, so the
    iteration contracts fast, and any column whose KKT gap stays above
    tolerance afterwards is polished by the exact active-set coder.

    Returns (weights, auxiliary, dual, info).  The returned weights are the
    best feasible iterate by the coupled objective (never worse than the
    start), while Z and Y always carry the last iterate so the next hot
    start resumes the ADMM sequence.  info holds iteration count and a
    convergence flag; hitting the cap returns the best iterate with
    converged False.
    """
    X = np.asarray(structure, dtype=float)
    F = X.shape[1]
    P = X.shape[0] // 3
    validate_mask(mask, min_allowed=1)
    G = X.T @ X
    inv_fp = 1.0 / (F * P)
    rho = config.rho
    alpha = config.lambda1 / F
    allowed = mask.allowed
    cols_allowed = [mask.column(f) for f in range(F)]
    A2 = 2.0 * inv_fp * G
    lam_max = float(np.linalg.eigvalsh(G)[-1])

    if weights is None:
        W = _decoupled_weights(G, cols_allowed)
        Z = W.copy()
        Y = np.zeros((F, F))
    else:
        W = np.array(weights, dtype=float, copy=True)
        Z = np.array(auxiliary, dtype=float, copy=True)
        Y = np.array(dual, dtype=float, copy=True)

    def coupled(Wc):
        return inv_fp * float(np.sum((X - X @ Wc) ** 2)) + config.lambda1 * psi1(Wc)

    best_W = W.copy()
    best_val = coupled(W)
    converged = False
    iterations = 0
    for _ in range(config.admm_max_iter):
        iterations += 1
        L = 2.0 * inv_fp * lam_max + rho
        const = Y - rho * Z - A2
        for _ in range(500):
            grad = A2 @ W + rho * W + const
            W_new = _masked_simplex_project(W - grad / L, allowed)
            delta = np.abs(W_new - W).max()
            W = W_new
            if delta <= 1e-13:
                break
        grad = A2 @ W + rho * W + const
        mu = np.where(allowed, grad, np.inf).min(axis=0)
        viol = np.where(W > 1e-12, grad - mu[None, :], 0.0).max(axis=0)
        tol = 1e-9 * (1.0 + np.abs(np.where(allowed, grad, 0.0)).max(axis=0))
        for f in np.flatnonzero(viol > tol):
            idx = cols_allowed[f]
            Hf = inv_fp * G[np.ix_(idx, idx)] + (rho / 2.0) * np.eye(idx.size)
            cf = -A2[idx, f] + Y[idx, f] - rho * Z[idx, f]
            col = np.zeros(F)
            col[idx] = minimize_on_simplex(Hf, cf, w0=W[idx, f])
            W[:, f] = col
        B = Y + rho * W
        Z_new = 0.5 * ((B + B.T) / rho + (B - B.T) / (8.0 * alpha + rho))
        Y += rho * (W - Z_new)
        r_pri = np.linalg.norm(W - Z_new)
        s_dual = rho * np.linalg.norm(Z_new - Z)
        Z = Z_new

        val = coupled(W)
        if val < best_val:
            best_val = val
            best_W = W.copy()

        eps_pri = F * config.admm_abs_tol + config.admm_rel_tol * max(
            np.linalg.norm(W), np.linalg.norm(Z)
        )
        eps_dual = F * config.admm_abs_tol + config.admm_rel_tol * np.linalg.norm(Y)
        if (
            r_pri <= eps_pri
            and s_dual <= eps_dual
            and np.abs(W - Z).max() <= config.consensus_tol
        ):
            converged = True
            break
        if config.adapt_rho:
            if r_pri > 10.0 * s_dual:
                rho *= 2.0
            elif s_dual > 10.0 * r_pri:
                rho /= 2.0
    info = {"iterations": iterations, "converged": converged}
    if not converged:
        warnings.warn(
            f"ADMM hit the {config.admm_max_iter}-iteration cap; "
            "returning best iterate"
        )
    return best_W, Z, Y, info


def pair_distance_matrix(rays, video_ids):
    """Symmetric F x F matrix of mean two-ray triangulation costs.

    Entry (f, j) is the mean over shared points of the squared closest-point
    distance between the two viewing rays, minimized in closed form over both
    depths.  Same-video pairs, pairs with no shared point, near-parallel ray
    pairs and pairs whose minimizing depth is negative are all infinite.
    """
    ids = np.asarray(video_ids)
    present = rays.present
    F = present.shape[1]
    D = np.full((F, F), np.inf)
    for f in range(F):
        for j in range(f + 1, F):
            if ids[f] == ids[j]:
                continue
            cost = _pair_cost(rays, f, j)
            if cost is not None:
                D[f, j] = cost
                D[j, f] = cost
    return D


def _pair_depths(rays, f, j):
    # closed-form closest points between the ray bundles of frames f and j;
    # returns (shared point rows, depths along f, depths along j) or None
    # when the pair is unusable
    shared = rays.present[:, f] & rays.present[:, j]
    if not shared.any():
        return None
    a = rays.directions[shared, f]
    b = rays.directions[shared, j]
    u = rays.centers[f] - rays.centers[j]
    c = np.einsum("na,na->n", a, b)
    denom = 1.0 - c**2
    if (denom < 1e-12).any():
        return None
    au = a @ u
    bu = b @ u
    tf = (-au + c * bu) / denom
    tj = (bu - c * au) / denom
    if (tf < -1e-12).any() or (tj < -1e-12).any():
        return None
    return np.flatnonzero(shared), tf, tj


def _pair_cost(rays, f, j):
    sol = _pair_depths(rays, f, j)
    if sol is None:
        return None
    rows, tf, tj = sol
    a = rays.directions[rows, f]
    b = rays.directions[rows, j]
    u = rays.centers[f] - rays.centers[j]
    resid = u[None, :] + tf[:, None] * a - tj[:, None] * b
    return float(np.einsum("na,na->n", resid, resid).mean())


def initialize_depths(rays, frames):
    """Bootstrap depths by pairing each frame with its best cross-video mate.

    For every frame f the partner j minimizing the mean two-ray
    triangulation cost is selected (ties to the smallest j) and the
    closed-form depths of that pairing are assigned.  Points present in f
    but not shared with the partner get the median of the assigned depths;
    frames with no usable partner fall back to unit depth and are flagged.

    Returns (depths, flags).
    """
    validate_frames(frames)
    ids = frame_video_ids(frames)
    P, F = rays.present.shape
    D = pair_distance_matrix(rays, ids)
    depths = np.full((P, F), np.nan)
    flags = []
    for f in range(F):
        row = D[f]
        pres_f = rays.present[:, f]
        if not pres_f.any():
            continue
        if not np.isfinite(row).any():
            depths[pres_f, f] = 1.0
            flags.append(f"init-unit-depth-frame-{f}")
            continue
        j = int(np.argmin(row))
        rows, tf, _ = _pair_depths(rays, f, j)
        depths[rows, f] = tf
        rest = pres_f.copy()
        rest[rows] = False
        if rest.any():
            depths[rest, f] = float(np.median(tf))
    return depths, flags


def normalize_scale(frames):
    """Rescale camera centers so the mean inter-camera distance is 1.

    Distances are measured between per-video mean centers (between frame
    centers for a single video).  Returns (scaled frames, factor) with
    factor the multiplier applied to every center; divide solver outputs by
    it to return to input units.
    """
    validate_frames(frames)
    centers = frame_centers(frames)
    ids = frame_video_ids(frames)
    uniq = np.unique(ids)
    if uniq.size >= 2:
        reps = np.stack([centers[ids == v].mean(axis=0) for v in uniq])
    else:
        reps = centers
    n = reps.shape[0]
    if n < 2:
        raise InputError("scale normalization needs at least 2 camera centers")
    iu = np.triu_indices(n, k=1)
    dists = np.linalg.norm(reps[iu[0]] - reps[iu[1]], axis=1)
    mean_dist = float(dists.mean())
    spread = float(np.abs(reps - reps.mean(axis=0)).max())
    if mean_dist <= 1e-12 * max(1.0, spread) or mean_dist == 0.0:
        raise InputError("camera centers coincide; scale undefined")
    factor = 1.0 / mean_dist
    scaled = [
        replace(frame, center=frame.center * factor, rotation=frame.rotation.copy())
        for frame in frames
    ]
    return scaled, factor


def _fill_missing(structure, present, frames):
    # seed missing entries by interpolating the point's observed positions
    # along each video's own frame order (capture times inside one video are
    # monotone even though cross-video timing is unknown); points missing
    # from a whole video fall back to their global mean position
    P = present.shape[0]
    X = structure.copy()
    ids = frame_video_ids(frames)
    pos = np.array([frame.frame_in_video for frame in frames])
    for p in range(P):
        if present[p].all():
            continue
        block = X[3 * p : 3 * p + 3]
        fallback = block[:, present[p]].mean(axis=1)
        for v in np.unique(ids):
            cols = np.flatnonzero(ids == v)
            cols = cols[np.argsort(pos[cols])]
            have = present[p, cols]
            fill = cols[~have]
            if fill.size == 0:
                continue
            if not have.any():
                block[:, fill] = fallback[:, None]
                continue
            t = pos[cols]
            for a in range(3):
                block[a, fill] = np.interp(
                    pos[fill], t[have], block[a, cols[have]]
                )
    return X


def solve(obs, frames, config=None):
    """Reconstruct structure and weights from unsynchronized observations.

    Runs depth initialization, a decoupled warm-up that alternates exact
    coding with penalty-free X refits, then a bootstrap W-step followed by
    the coupled loop of exact X-steps and ADMM W-steps, stopping when the
    relative objective change per outer iteration falls below
    ``outer_rel_tol``.  With ``second_stage`` the coupled alternation
    repeats with lambda2 = 0, warm started, and the carried objective trace
    stays non-increasing across the switch.  The warm-up runs before the
    trace starts; the trace covers only the coupled phase.

    Outputs are mapped back to input units; ``scale_factor`` records the
    normalization multiplier that was applied to camera centers.
    """
    if config is None:
        config = SolverConfig()
    config.validate()
    validate_frames(frames)
    F = len(frames)
    if obs.frame_count != F:
        raise InputError(
            f"observations have {obs.frame_count} frames, frame list has {F}"
        )
    if F < 3:
        raise InputError(f"need at least 3 frames, got {F}")
    unobserved = np.flatnonzero(~obs.present.any(axis=1))
    if unobserved.size:
        raise InputError(f"points {unobserved.tolist()[:8]} have no observations")
    ids = frame_video_ids(frames)
    if config.same_video_exclusion and np.unique(ids).size < 2:
        raise InfeasibleError(
            "same-video exclusion with a single video leaves every support "
            "column empty"
        )
    mask = support_mask(ids, exclude_same_video=config.same_video_exclusion)
    validate_mask(mask, min_allowed=2)

    scaled_frames, factor = normalize_scale(frames)
    rays = compute_rays(scaled_frames, obs)
    depths, flags = initialize_depths(rays, scaled_frames)
    structure = assemble_structure(depths, rays)
    structure = _fill_missing(structure, rays.present, scaled_frames)

    # Decoupled warm-up: alternate the exact per-column coder with
    # penalty-free X refits before any coupled iteration.  The depth
    # initialization carries enough error to spread the coded weights, and
    # the coupled alternation preserves that spread as a fixed point; the
    # decoupled pair instead contracts both blocks toward the
    # self-expressive solution at a few milliseconds per pass.
    warm_cfg = replace(config, lambda2=0.0)
    W = None
    warm_iters = 0
    prev = math.inf
    for _ in range(config.outer_max):
        W = self_express(structure, mask, warm_start=W)
        structure, depths, flags = x_step(
            structure, W, warm_cfg, rays, scaled_frames, flags
        )
        cur = objective(structure, W, warm_cfg, scaled_frames, rays)[1][
            "self_expression"
        ]
        warm_iters += 1
        if abs(prev - cur) <= config.outer_rel_tol * abs(cur):
            break
        prev = cur
    flags.append(f"warmup-{warm_iters}")

    stages = [config.lambda2]
    if config.second_stage and config.lambda2 > 0:
        stages.append(0.0)

    trace = []
    Z = Y = None
    admm_total = 0
    outer_total = 0
    admm_misses = 0
    converged = False
    for stage_idx, lam2 in enumerate(stages):
        stage_cfg = replace(config, lambda2=lam2)
        if Z is None:
            W, Z, Y, info = admm_w_step(structure, mask, stage_cfg)
            admm_total += info["iterations"]
            admm_misses += 0 if info["converged"] else 1
        trace.append(objective(structure, W, stage_cfg, scaled_frames, rays)[0])
        converged = False
        for _ in range(config.outer_max):
            prev = trace[-1]
            structure, depths, flags = x_step(
                structure, W, stage_cfg, rays, scaled_frames, flags
            )
            trace.append(objective(structure, W, stage_cfg, scaled_frames, rays)[0])
            W, Z, Y, info = admm_w_step(structure, mask, stage_cfg, W, Z, Y)
            admm_total += info["iterations"]
            admm_misses += 0 if info["converged"] else 1
            trace.append(objective(structure, W, stage_cfg, scaled_frames, rays)[0])
            outer_total += 1
            if abs(prev - trace[-1]) <= config.outer_rel_tol * abs(trace[-1]):
                converged = True
                break
        if not converged:
            flags.append(f"stage{stage_idx}-outer-cap")
    if admm_misses:
        flags.append(f"admm-cap-hit-{admm_misses}x")

    return SolveState(
        structure=structure / factor,
        depths=depths / factor,
        weights=W,
        dual=Y,
        auxiliary=Z,
        objective_trace=trace,
        flags=flags,
        scale_factor=factor,
        outer_iterations=outer_total,
        admm_iterations=admm_total,
        converged=converged,
    )
