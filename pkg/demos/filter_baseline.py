"""Learned coding weights vs a fixed temporal-smoothness filter.

The classic trajectory prior minimizes a high-pass filter response over the
frames in capture order, which is the same residual form as
self-expression with a hand-picked banded W.  Two comparisons on one
motion:

1. Representation: how well does each W explain the true shapes (residual,
   lower is better), sorted vs randomly shuffled columns.  The filter only
   works when the columns are in temporal order; the learned weights find
   that order themselves.
2. Reconstruction: solve the same scene with learned weights and with the
   fixed filter coupling, and compare point errors.
"""

import numpy as np

from unsync3d.analysis import filter_weights, residual
from unsync3d.evaluate import evaluate
from unsync3d.geometry import compute_rays, frame_video_ids, structure_to_points
from unsync3d.simplex import self_express, support_mask
from unsync3d.solver import minimize_structure, solve
from unsync3d.synth import CorruptionSpec, RigSpec, generate, procedural_motion

motion = procedural_motion(point_count=4, sample_count=48, seed=3)
scene = generate(motion, RigSpec(camera_count=4), CorruptionSpec(seed=3))
F = len(scene.frames)

# time-ordered truth: the filter pattern assumes sorted columns
frame_of_rank = np.empty(F, dtype=int)
frame_of_rank[scene.truth_order] = np.arange(F)
X_sorted = scene.truth[:, frame_of_rank]

ids = frame_video_ids(scene.frames)
W_learned = self_express(scene.truth, support_mask(ids, exclude_same_video=True))
W_learned_sorted = W_learned[np.ix_(frame_of_rank, frame_of_rank)]
W_filter = filter_weights([-1.0, 2.0, -1.0], F).w_matrix

rng = np.random.default_rng(0)
perm = rng.permutation(F)
print("self-expression residual on true shapes (lower is better)")
print(f"  learned weights, sorted frames:    {residual(X_sorted, W_learned_sorted):.4f}")
print(f"  learned weights, shuffled frames:  "
      f"{residual(X_sorted[:, perm], W_learned_sorted[np.ix_(perm, perm)]):.4f}")
print(f"  filter weights, sorted frames:     {residual(X_sorted, W_filter):.4f}")
print(f"  filter weights, shuffled frames:   {residual(X_sorted[:, perm], W_filter):.4f}")
print("  (the learned residual is permutation-covariant; the fixed filter")
print("   depends on a frame order nobody knows at capture time)")

# reconstruction with each prior
state = solve(scene.observations, scene.frames)
rep = evaluate(state.structure, scene.truth, state.weights, scene.truth_order)

bank = filter_weights([-1.0, 2.0, -1.0], F)
rays = compute_rays(scene.frames, scene.observations)


def filter_error(order):
    G = bank.g_matrix[np.asarray(order, dtype=int), :]
    X, _ = minimize_structure(G @ G.T, rays)
    err = np.linalg.norm(
        structure_to_points(X, 4) - structure_to_points(scene.truth, 4), axis=2
    )
    return float(np.median(err))


print("\nreconstruction error (median mm)")
print(f"  learned dictionary:                 {rep.median_error:.3f}")
print(f"  filter prior, ORACLE capture order: {filter_error(scene.truth_order):.3f}")
print(f"  filter prior, frame-index order:    {filter_error(np.arange(F)):.3f}")
print("  (with the true order the smoothness prior is essentially exact on")
print("   clean data, but that order is unknown at capture time; without it")
print("   the filter collapses, while the solver recovers the order itself")
print("   and stays within a tenth of a millimeter)")
