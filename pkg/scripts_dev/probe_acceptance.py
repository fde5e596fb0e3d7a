"""Pre-flight probe for the expensive acceptance arms.

Part B: criterion 4/5 shape at reduced cap (20 epochs) - seeds 2,3 at
128 and seeds 1,2,3 at 64 - to confirm every seed converges.
Part A: criterion 6 hard variant (lesion_strength 25) at caps 30/12,
edge-gray vs gray-only, 3 seeds.
"""

import sys
import time

sys.path.insert(0, "src")

from leafrust.data import SynthConfig
from leafrust.experiments import ExperimentSpec, run_experiment
from leafrust.nn.train import TrainConfig


def show(row):
    m = row.metrics
    if m is None:
        print(f"  {row.label} seed {row.seed}: ERROR {row.error}", flush=True)
    else:
        print(
            f"  {row.label} seed {row.seed}: P {m.precision:.3f} R {m.recall:.3f} "
            f"F1 {m.f1:.3f} Dice {m.dice:.3f} best {row.best_epoch} "
            f"stop {row.stopped_epoch} wall {row.wall_seconds:.0f}s",
            flush=True,
        )


t0 = time.perf_counter()
print("=== Part B: resolution arms, cap 20 ===", flush=True)
spec_b = ExperimentSpec(
    dataset=SynthConfig(count=600, resolution=128, lesion_probability=0.5, seed=1),
    axis="resolutions",
    values=(64, 128),
    train=TrainConfig(max_epochs=20, patience=60),
    seeds=(1, 2, 3),
)
run_experiment(spec_b, progress=show)
print(f"Part B wall: {time.perf_counter() - t0:.0f}s", flush=True)

t1 = time.perf_counter()
print("=== Part A: hard variant (strength 25), caps 30/12 ===", flush=True)
spec_a = ExperimentSpec(
    dataset=SynthConfig(
        count=600, resolution=128, lesion_probability=0.5, seed=1,
        lesion_strength=25,
    ),
    axis="methods",
    values=("edge-gray", "gray-only"),
    resolution=128,
    train=TrainConfig(max_epochs=30, patience=12),
    seeds=(1, 2, 3),
)
run_experiment(spec_a, progress=show)
print(f"Part A wall: {time.perf_counter() - t1:.0f}s", flush=True)
print(f"total: {time.perf_counter() - t0:.0f}s", flush=True)
