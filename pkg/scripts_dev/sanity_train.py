"""Quick capped training run on the synthetic set to gauge convergence."""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from leafrust.data import SynthConfig, generate_synthetic, split_dataset
from leafrust.metrics import evaluate_predictions
from leafrust.nn.model import ModelConfig
from leafrust.nn.train import TrainConfig, train_model
from leafrust.preprocessing import ImagePreprocessor

t0 = time.perf_counter()
samples = generate_synthetic(SynthConfig(count=600, seed=1))
print(f"synth: {time.perf_counter()-t0:.1f}s", flush=True)

split = split_dataset(samples, (0.7, 0.15, 0.15), seed=0)
pre = ImagePreprocessor(method="edge-gray", resolution=128)

t0 = time.perf_counter()
parts = {}
for name, part in (("train", split.train), ("val", split.validation), ("test", split.test)):
    x = pre.transform([s.image for s in part]).astype(np.float32) / 255.0
    x = x[:, None, :, :]
    y = np.array([s.label.value for s in part], dtype=np.int64)
    parts[name] = (x, y)
    print(f"{name}: {x.shape}, rust {int(y.sum())}", flush=True)
print(f"preprocess: {time.perf_counter()-t0:.1f}s", flush=True)

t0 = time.perf_counter()
net, report = train_model(
    parts["train"][0], parts["train"][1],
    parts["val"][0], parts["val"][1],
    ModelConfig(input_side=128),
    TrainConfig(max_epochs=20, patience=60, seed=1),
)
wall = time.perf_counter() - t0
n_ep = len(report.train_loss)
print(f"training: {wall:.1f}s, {n_ep} epochs, {wall/n_ep:.1f}s/epoch", flush=True)
for e in range(n_ep):
    va = report.val_accuracy[e]
    print(f"  epoch {e+1:3d}: train {report.train_loss[e]:.5f}  "
          f"val {report.val_loss[e]:.6f}  acc {va if va is None else f'{va:.3f}'}",
          flush=True)
print(f"best epoch {report.best_epoch}, stopped {report.stopped_epoch}", flush=True)

xt, yt = parts["test"]
pred = net.predict(xt)
m = evaluate_predictions(yt, pred)
print("test:", {k: round(v, 4) if isinstance(v, float) else v
                for k, v in m.as_dict().items()}, flush=True)
