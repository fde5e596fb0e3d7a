"""Per-epoch look at the low-contrast variant: when (if ever) does each
preprocessing method start generalizing, and what early-stop budget does
criterion 6 need? One seed per method, long leash, no early exit.
"""

import sys
import time

sys.path.insert(0, "src")

import numpy as np

from leafrust.data import SynthConfig, generate_synthetic, split_dataset
from leafrust.metrics import evaluate_predictions
from leafrust.nn.model import ModelConfig
from leafrust.nn.train import TrainConfig, train_model
from leafrust.preprocessing import ImagePreprocessor

STRENGTH = int(sys.argv[1]) if len(sys.argv) > 1 else 25
MAX_EPOCHS = int(sys.argv[2]) if len(sys.argv) > 2 else 60
COUNT = int(sys.argv[3]) if len(sys.argv) > 3 else 600
DLO = int(sys.argv[4]) if len(sys.argv) > 4 else 3
DHI = int(sys.argv[5]) if len(sys.argv) > 5 else 6
CLO = int(sys.argv[6]) if len(sys.argv) > 6 else 2
CHI = int(sys.argv[7]) if len(sys.argv) > 7 else 5

cfg = SynthConfig(
    count=COUNT, resolution=128, lesion_probability=0.5, seed=1,
    lesion_strength=STRENGTH,
    lesion_diameter_px=(DLO, DHI), lesion_count_range=(CLO, CHI),
)
samples = generate_synthetic(cfg)
split = split_dataset(samples, (0.7, 0.15, 0.15), seed=0)

for method in ("edge-gray", "gray-only"):
    pre = ImagePreprocessor(method=method, resolution=128)

    def arrays(part):
        x = pre.transform([s.image for s in part]).astype(np.float32) / 255.0
        return x[:, None], np.array([s.label.value for s in part])

    xt, yt = arrays(split.train)
    xv, yv = arrays(split.validation)
    xs, ys = arrays(split.test)

    t0 = time.perf_counter()
    net, report = train_model(
        xt, yt, xv, yv,
        ModelConfig(input_side=128),
        TrainConfig(max_epochs=MAX_EPOCHS, patience=MAX_EPOCHS, seed=1),
    )
    wall = time.perf_counter() - t0
    m = evaluate_predictions(ys, net.predict(xs))
    print(f"== {method} strength {STRENGTH} count {COUNT} "
          f"d({DLO},{DHI}) c({CLO},{CHI}) ==", flush=True)
    for epoch, (tl, vl) in enumerate(zip(report.train_loss, report.val_loss), 1):
        acc = report.val_accuracy[epoch - 1]
        acc_text = f"{acc:.3f}" if acc is not None else "-"
        print(f"  ep {epoch:3d} train {tl:8.4f} val {vl:9.4f} acc {acc_text}",
              flush=True)
    print(f"  best {report.best_epoch} stop {report.stopped_epoch} "
          f"wall {wall:.0f}s test P {m.precision:.3f} R {m.recall:.3f} "
          f"F1 {m.f1:.3f} Dice {m.dice:.3f}", flush=True)
