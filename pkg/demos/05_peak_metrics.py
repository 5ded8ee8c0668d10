"""
Peak-aware evaluation
=====================

Detection with prominence and separation thresholds, one-to-one matching
within a position tolerance, and the derived precision/recall/F1 plus
location and intensity errors.
"""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from rampinn import PeakParams, Spectrum, default_grid, find_peaks, match_peaks

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

grid = default_grid(1000)
w = grid.points
rng = np.random.default_rng(8)

truth = np.zeros(1000)
centers = [0.15, 0.33, 0.52, 0.55, 0.78]
for c, a in zip(centers, [1.0, 0.6, 0.8, 0.35, 0.5]):
    truth += a * np.exp(-0.5 * ((w - c) / 0.006) ** 2)
truth /= truth.max()

# an imperfect "prediction": slightly shifted peaks, one missing, one spurious
pred = np.zeros(1000)
for c, a in zip([0.152, 0.335, 0.522, 0.9], [0.9, 0.55, 0.85, 0.2]):
    pred += a * np.exp(-0.5 * ((w - c) / 0.007) ** 2)
pred += 0.01 * rng.standard_normal(1000)
pred = np.clip(pred, 0, None)
pred /= pred.max()

params = PeakParams()
pred_peaks = find_peaks(Spectrum(grid, pred), params)
true_peaks = find_peaks(Spectrum(grid, truth), params)
report = match_peaks(pred_peaks, true_peaks, params.match_tol)

print(f"TP={report.tp} FP={report.fp} FN={report.fn}")
print(f"precision={report.precision:.3f} recall={report.recall:.3f} f1={report.f1:.3f}")
print(f"location error={report.mle_norm:.5f}  intensity error={report.rie_mean():.3f}")

fig, ax = plt.subplots(figsize=(9, 3.4))
ax.plot(w, truth, label="truth", lw=0.9)
ax.plot(w, pred, label="prediction", lw=0.9)
for p in true_peaks:
    ax.axvline(p.position, color="tab:blue", alpha=0.2, lw=2)
for p in pred_peaks:
    ax.plot(p.position, p.amplitude, "rv", ms=5)
ax.legend(fontsize="small")
ax.set_xlabel("normalized wavenumber")
ax.set_title(f"F1 {report.f1:.2f}, matched {report.tp} of {len(true_peaks)} true peaks")
fig.tight_layout()
fig.savefig(out_dir / "peak_metrics.png", dpi=150)
print(f"wrote {out_dir / 'peak_metrics.png'}")
