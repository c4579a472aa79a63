"""Where do the coding weights go when the shapes are smooth?

A moving point cloud changes slowly between captures, so each shape is
nearly a blend of the shapes captured just before and just after it.  This
script codes ground-truth shapes (no reconstruction involved) on the masked
simplex and checks where the weight mass lands.  The punchline: the two
largest coefficients of almost every column sit exactly on the true
temporal neighbors, even though the coder never sees a timestamp.
"""

import numpy as np

from unsync3d.evaluate import evaluate
from unsync3d.geometry import frame_video_ids
from unsync3d.simplex import self_express, sparsity_profile, support_mask
from unsync3d.synth import CorruptionSpec, RigSpec, generate, procedural_motion

motion = procedural_motion(point_count=5, sample_count=60, seed=0)
scene = generate(motion, RigSpec(camera_count=4), CorruptionSpec(seed=0))
F = len(scene.frames)

ids = frame_video_ids(scene.frames)
mask = support_mask(ids, exclude_same_video=True)
W = self_express(scene.truth, mask)

rep = evaluate(scene.truth, scene.truth, W, scene.truth_order)
nnz = sparsity_profile(W, eps=1e-3)

print(f"coded {F} shapes from {np.unique(ids).size} videos")
print(f"top-2 coefficient mass (mean over columns): {rep.top2_sum_mean:.4f}")
print(f"top-2 on the true temporal neighbors:       {rep.top2_neighbor_frequency:.4f}")
print(f"nonzeros per column (median / max):         {int(np.median(nnz))} / {nnz.max()}")

# show a few columns explicitly: global frame index, its capture-time rank,
# and the frames its two largest weights point at
frame_of_rank = np.empty(F, dtype=int)
frame_of_rank[scene.truth_order] = np.arange(F)
print("\nframe  rank  top-2 atoms (their ranks)        weights")
for f in (5, 20, 35, 50):
    top = np.argsort(-W[:, f], kind="stable")[:2]
    ranks = [int(scene.truth_order[a]) for a in top]
    print(
        f"{f:5d}  {int(scene.truth_order[f]):4d}  "
        f"{top.tolist()} (ranks {ranks})".ljust(40)
        + f"  {W[top[0], f]:.3f} {W[top[1], f]:.3f}"
    )

print(
    "\nThe weight pattern recovers temporal adjacency across videos with no"
    "\nsynchronization input; this is what the solver exploits."
)
