"""
Synthetic CARS/Raman/NRB samples
================================

Draws a few paired samples from the generator and plots how the coherent
mixing of resonances and background distorts the measured spectrum.
"""

from pathlib import Path

import matplotlib.pyplot as plt

from rampinn import GenConfig, generate_dataset

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

cfg = GenConfig(seed=11, n_samples=4)
samples = generate_dataset(cfg)

fig, axes = plt.subplots(len(samples), 1, figsize=(8, 2.2 * len(samples)), sharex=True)
for ax, sample in zip(axes, samples):
    grid = sample.triple.cars.grid.points
    ax.plot(grid, sample.triple.cars.values, label="CARS", color="k", lw=0.8)
    ax.plot(grid, sample.triple.raman.values, label="Raman truth", color="tab:green", lw=0.8)
    ax.plot(grid, sample.triple.nrb.values, label="NRB truth", color="tab:orange", lw=0.8)
    ax.set_ylabel(f"{sample.n_peaks} peaks\n({sample.nrb_kind})")
axes[0].legend(loc="upper right", fontsize="small")
axes[-1].set_xlabel("normalized wavenumber")
fig.tight_layout()
fig.savefig(out_dir / "synthetic_samples.png", dpi=150)
print(f"wrote {out_dir / 'synthetic_samples.png'}")
