"""Per-epoch eval-mode train vs val metrics to localize instability.

Usage: diag_train.py <epochs> <dlo> <dhi> <clo> <chi> [seed]
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from leafrust.data import SynthConfig, generate_synthetic, split_dataset
from leafrust.metrics import evaluate_predictions
from leafrust.nn.model import ModelConfig
from leafrust.nn.train import TrainConfig, evaluate_loss, train_model
from leafrust.preprocessing import ImagePreprocessor

epochs = int(sys.argv[1])
dlo, dhi = int(sys.argv[2]), int(sys.argv[3])
clo, chi = int(sys.argv[4]), int(sys.argv[5])
seed = int(sys.argv[6]) if len(sys.argv) > 6 else 1

cfg = SynthConfig(
    count=600, seed=1,
    lesion_diameter_px=(dlo, dhi),
    lesion_count_range=(clo, chi),
)
samples = generate_synthetic(cfg)
split = split_dataset(samples, (0.7, 0.15, 0.15), seed=0)
pre = ImagePreprocessor(method="edge-gray", resolution=128)

parts = {}
for name, part in (("train", split.train), ("val", split.validation), ("test", split.test)):
    x = pre.transform([s.image for s in part]).astype(np.float32) / 255.0
    parts[name] = (x[:, None, :, :], np.array([s.label.value for s in part], dtype=np.int64))

xt, yt = parts["train"]
xv, yv = parts["val"]
sub = slice(0, 128)


def hook(epoch, net):
    tl, ta = evaluate_loss(net, xt[sub], yt[sub])
    vl, va = evaluate_loss(net, xv, yv)
    bn = net._norm if hasattr(net, "_norm") else None
    extra = ""
    for layer in net._sequence:
        if layer.__class__.__name__ == "BatchNorm2d":
            extra = (f"  rvar[{layer.running_var.min():.3e},"
                     f"{layer.running_var.max():.3e}]")
    print(f"  ep {epoch:3d}: evalTrain {tl:9.4f}/{ta:.3f}  "
          f"val {vl:9.4f}/{va:.3f}{extra}", flush=True)
    return vl


t0 = time.perf_counter()
net, report = train_model(
    xt, yt, None, None, ModelConfig(input_side=128),
    TrainConfig(max_epochs=epochs, patience=60, seed=seed),
    eval_hook=hook,
)
wall = time.perf_counter() - t0
print(f"wall {wall:.0f}s ({wall/len(report.train_loss):.1f}s/ep), "
      f"best {report.best_epoch}, trainLoss[-3:] "
      f"{[round(v, 4) for v in report.train_loss[-3:]]}", flush=True)

xs, ys = parts["test"]
m = evaluate_predictions(ys, net.predict(xs))
print(f"test: P {m.precision:.3f} R {m.recall:.3f} F1 {m.f1:.3f} "
      f"Dice {m.dice:.3f}", flush=True)
