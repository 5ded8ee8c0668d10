"""
Classical phase retrieval with an exact background reference
============================================================

The single-pass retrieval works well for an isolated resonance over a
background bounded away from zero, and degrades once resonances are strong
or the reference has near-zero regions -- the failure mode that motivates a
learned reconstruction.
"""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
from scipy.special import expit

from rampinn import Spectrum, classical_kk_retrieve, default_grid

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

grid = default_grid(1000)
w = grid.points


def lorentz(amplitude, center, width):
    delta = center - w
    den = delta**2 + width**2
    return amplitude * delta / den, amplitude * width / den


fig, axes = plt.subplots(1, 2, figsize=(10, 3.2))

# benign: one resolved peak, background well above zero
re, im = lorentz(1.0, 0.4, 0.01)
scale = np.max(np.hypot(re, im))
re, im = re / scale, im / scale
nrb = expit(8 * (w - 0.05)) * expit(-8 * (w - 0.95))
raw = (re + nrb) ** 2 + im**2
cars = Spectrum(grid, raw / raw.max(), normalized=True)
ref = Spectrum(grid, nrb**2 / raw.max())
est = classical_kk_retrieve(cars, ref)
axes[0].plot(w, im / im.max(), label="truth")
axes[0].plot(w, est.values, "--", label="retrieved")
axes[0].set_title(f"benign (corr {np.corrcoef(est.values, im / im.max())[0, 1]:.3f})")

# hard: several strong peaks, background touching zero
rng = np.random.default_rng(4)
re = np.zeros(1000)
im = np.zeros(1000)
for _ in range(8):
    r_, i_ = lorentz(rng.uniform(0.2, 1.0), rng.uniform(0.1, 0.9), rng.uniform(0.003, 0.02))
    re += r_
    im += i_
scale = np.max(np.hypot(re, im))
re, im = re / scale, im / scale
poly = 0.5 - (w - 0.5) ** 2 * 2
nrb = (poly - poly.min()) / (poly.max() - poly.min())
raw = (re + nrb) ** 2 + im**2
cars = Spectrum(grid, raw / raw.max(), normalized=True)
ref = Spectrum(grid, nrb**2 / raw.max())
est = classical_kk_retrieve(cars, ref)
axes[1].plot(w, im / im.max(), label="truth")
axes[1].plot(w, est.values, "--", label="retrieved")
axes[1].set_title(f"hard (corr {np.corrcoef(est.values, im / im.max())[0, 1]:.3f})")

for ax in axes:
    ax.legend(fontsize="small")
    ax.set_xlabel("normalized wavenumber")
fig.tight_layout()
fig.savefig(out_dir / "classical_baseline.png", dpi=150)
print(f"wrote {out_dir / 'classical_baseline.png'}")
