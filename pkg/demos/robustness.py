"""Accuracy under pixel noise and missing observations.

Sweeps one corruption axis at a time on a 16-point scene, holding the
geometry and the underlying random draws fixed (common random numbers), so
each curve isolates the corruption level.  Noisy pixels use the soft-ray
mode (lambda3 = 100); missing data keeps the hard ray constraint.  Writes
robustness_noise.csv and robustness_miss.csv next to this script.
"""

import pathlib
import time

from unsync3d.evaluate import emit_tables, evaluate
from unsync3d.solver import SolverConfig, solve
from unsync3d.synth import CorruptionSpec, RigSpec, procedural_motion, sweep

here = pathlib.Path(__file__).parent
motion = procedural_motion(point_count=16, sample_count=48, seed=1)
rig = RigSpec(camera_count=4)

for axis, values, config in (
    ("noise", [0.0, 1.0, 2.0, 4.0], SolverConfig(lambda3=100.0)),
    ("miss", [0.0, 0.1, 0.2, 0.4], SolverConfig()),
):
    rows = []
    print(f"{axis} sweep:")
    for value, scene in sweep(motion, rig, CorruptionSpec(seed=1), axis, values):
        start = time.perf_counter()
        state = solve(scene.observations, scene.frames, config)
        rep = evaluate(
            state.structure, scene.truth, state.weights, scene.truth_order
        )
        rows.append((value, rep))
        print(
            f"  {axis} {value:<4}  acc@30 {rep.accuracy_at[30]:.4f}  "
            f"median {rep.median_error:7.3f} mm  "
            f"({time.perf_counter() - start:.1f}s)"
        )
    out = here / f"robustness_{axis}.csv"
    emit_tables(rows, axis, out)
    print(f"  -> {out.name}\n")

print(
    "Accuracy degrades smoothly along both axes; a single scene's curve"
    "\ncarries sampling wobble, so the test suite pools several corruption"
    "\nseeds when it checks monotonicity."
)
