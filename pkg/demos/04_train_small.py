"""
Training a small reconstruction model
=====================================

A desk-scale run: a narrow model on a small synthetic split, trained with
the full physics-informed objective.  Takes a few minutes on a laptop CPU.
"""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from rampinn import (
    GenConfig,
    RamPinnConfig,
    RamPinnModel,
    dataset_from_samples,
    generate_dataset,
    predict,
    train,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

train_samples = generate_dataset(GenConfig(seed=1, n_samples=60))
test_samples = generate_dataset(GenConfig(seed=2, n_samples=8))

cfg = RamPinnConfig(width_multiplier=0.125, seed=0, max_epochs=40, patience=40, batch_size=16)
model = RamPinnModel(cfg)
history = train(model, dataset_from_samples(train_samples), None, cfg)

fig, axes = plt.subplots(1, 2, figsize=(10, 3.4))
epochs = [e["epoch"] for e in history.epochs]
axes[0].plot(epochs, [e["L_total_train"] for e in history.epochs], label="train")
axes[0].plot(epochs, [e["L_total_val"] for e in history.epochs], label="val")
axes[0].set_xlabel("epoch")
axes[0].set_ylabel("total loss")
axes[0].legend(fontsize="small")

sample = test_samples[0].triple
raman_hat, nrb_hat = predict(model, sample.cars)
axes[1].plot(sample.cars.grid.points, sample.cars.values, color="k", lw=0.7, label="CARS in")
axes[1].plot(sample.raman.grid.points, sample.raman.values, lw=0.9, label="Raman truth")
axes[1].plot(raman_hat.grid.points, raman_hat.values, "--", lw=0.9, label="Raman pred")
axes[1].set_xlabel("normalized wavenumber")
axes[1].legend(fontsize="small")

test_mse = np.mean(
    [
        np.mean((predict(model, s.triple.cars)[0].values - s.triple.raman.values) ** 2)
        for s in test_samples
    ]
)
axes[1].set_title(f"test MSE {test_mse:.4f}")
fig.tight_layout()
fig.savefig(out_dir / "training_small.png", dpi=150)
print(f"wrote {out_dir / 'training_small.png'} (test MSE {test_mse:.5f})")
