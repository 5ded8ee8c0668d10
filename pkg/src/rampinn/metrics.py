"""Reconstruction and peak-aware evaluation metrics.

Reconstruction quality is summarised by MSE and PSNR between normalized
spectra.  The peak-aware suite detects peaks on an optionally smoothed
signal with height/prominence/separation thresholds, matches predicted to
true peaks one-to-one by nearest position within a tolerance, and derives
detection (precision/recall/F1), localisation (normalized mean location
error) and intensity (relative intensity error) metrics, with macro and
micro aggregation across spectra.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.signal

from .errors import BadWindow, EmptyInput, LengthMismatch
from .spectra import Spectrum


@dataclass(frozen=True)
class PeakParams:
    """Detection and matching thresholds on the normalized axis."""

    match_tol: float = 0.01          # one-to-one matching tolerance (tau)
    min_prominence: float = 0.02
    min_height: float = 0.0
    min_separation: float = 0.01     # fraction of the signal length
    smooth_window: int = 11
    smooth_polyorder: int = 3
    intensity_floor: float = 1e-8    # denominator floor of the intensity error

    def __post_init__(self):
        if not (0.0 < self.match_tol <= 1.0) or not (0.0 < self.min_separation <= 1.0):
            raise ValueError("match_tol and min_separation must lie in (0, 1]")
        if not (0.0 <= self.min_prominence <= 1.0) or not (0.0 <= self.min_height <= 1.0):
            raise ValueError("thresholds must lie in [0, 1]")
        if self.smooth_window != 1:
            if self.smooth_window % 2 == 0 or self.smooth_window <= self.smooth_polyorder:
                raise ValueError("smooth_window must be odd and exceed smooth_polyorder")


@dataclass(frozen=True)
class Peak:
    position: float      # normalized x in [0, 1]
    amplitude: float
    prominence: float
    index: int


@dataclass
class PeakMatchReport:
    """Counts, matches and derived metrics for one spectrum pair."""

    tp: int
    fp: int
    fn: int
    matches: list[tuple[Peak, Peak]] = field(default_factory=list)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) > 0 else math.nan

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) > 0 else math.nan

    @property
    def f1(self) -> float:
        # counts form 2TP/(2TP+FP+FN): equals the harmonic mean when both
        # precision and recall are defined, and gives 0 (not NaN) when one
        # side is empty but the other is not
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom > 0 else math.nan

    @property
    def location_errors(self) -> list[float]:
        return [abs(pred.position - true.position) for pred, true in self.matches]

    def intensity_errors(self, floor: float = 1e-8) -> list[float]:
        return [
            abs(pred.amplitude - true.amplitude) / max(abs(true.amplitude), floor)
            for pred, true in self.matches
        ]

    @property
    def mle_norm(self) -> float:
        errors = self.location_errors
        return float(np.mean(errors)) if errors else math.nan

    def rie_mean(self, floor: float = 1e-8) -> float:
        errors = self.intensity_errors(floor)
        return float(np.mean(errors)) if errors else math.nan

    def rie_median(self, floor: float = 1e-8) -> float:
        errors = self.intensity_errors(floor)
        return float(np.median(errors)) if errors else math.nan


# ---------------------------------------------------------------------------
# reconstruction metrics


def mse(pred: Spectrum, truth: Spectrum) -> float:
    """Mean squared pointwise difference."""
    if pred.grid != truth.grid:
        raise LengthMismatch("spectra must share one grid")
    return float(np.mean((pred.values - truth.values) ** 2))


def psnr(pred: Spectrum, truth: Spectrum) -> float:
    """Peak signal-to-noise ratio in dB with peak value 1; +inf when equal."""
    err = mse(pred, truth)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


# ---------------------------------------------------------------------------
# smoothing and detection


def savitzky_golay(s: Spectrum, window: int = 11, polyorder: int = 3) -> Spectrum:
    """Least-squares local polynomial smoothing with mirrored boundaries.

    ``window == 1`` is the identity.
    """
    if window == 1:
        return s
    if window % 2 == 0 or window <= polyorder:
        raise BadWindow(f"window {window} must be odd and exceed polyorder {polyorder}")
    if window > s.grid.length:
        raise BadWindow(f"window {window} exceeds signal length {s.grid.length}")
    smoothed = scipy.signal.savgol_filter(s.values, window, polyorder, mode="mirror")
    return Spectrum(s.grid, smoothed)


def _distance_filter(indices: np.ndarray, amplitudes: np.ndarray, min_samples: int) -> np.ndarray:
    """Greedy separation filter: keep higher peaks, drop neighbours too close.

    Ties are broken in favour of the lower index.
    """
    if len(indices) == 0 or min_samples <= 1:
        return np.ones(len(indices), dtype=bool)
    order = sorted(range(len(indices)), key=lambda i: (-amplitudes[i], indices[i]))
    keep = np.ones(len(indices), dtype=bool)
    for i in order:
        if not keep[i]:
            continue
        for j in range(len(indices)):
            if j != i and keep[j] and abs(int(indices[j]) - int(indices[i])) < min_samples:
                if (amplitudes[j], -indices[j]) < (amplitudes[i], -indices[i]):
                    keep[j] = False
    return keep


def find_peaks(s: Spectrum, params: PeakParams = PeakParams()) -> list[Peak]:
    """Detect peaks as filtered strict local maxima.

    Candidates are local maxima (plateaus contribute their midpoint), with
    topographic prominence.  Filters apply in order: height, prominence,
    then the greedy minimum-separation filter.
    """
    values = savitzky_golay(s, params.smooth_window, params.smooth_polyorder).values
    length = s.grid.length
    candidates, _ = scipy.signal.find_peaks(values)
    if len(candidates) == 0:
        return []
    prominences = scipy.signal.peak_prominences(values, candidates)[0]
    amplitudes = values[candidates]
    mask = amplitudes >= params.min_height
    mask &= prominences >= params.min_prominence
    candidates, prominences, amplitudes = candidates[mask], prominences[mask], amplitudes[mask]
    min_samples = int(round(params.min_separation * length))
    keep = _distance_filter(candidates, amplitudes, min_samples)
    return [
        Peak(
            position=float(idx / (length - 1)),
            amplitude=float(amp),
            prominence=float(prom),
            index=int(idx),
        )
        for idx, amp, prom in zip(candidates[keep], amplitudes[keep], prominences[keep])
    ]


# ---------------------------------------------------------------------------
# matching


def match_peaks(
    pred: list[Peak], truth: list[Peak], tol: float = 0.01, floor: float = 1e-8
) -> PeakMatchReport:
    """Greedy one-to-one matching by ascending position distance within ``tol``.

    Ties are resolved toward the lower predicted, then lower true, index.
    """
    pairs = []
    for i, p in enumerate(pred):
        for j, t in enumerate(truth):
            d = abs(p.position - t.position)
            if d <= tol:
                pairs.append((d, i, j))
    pairs.sort()
    used_pred: set[int] = set()
    used_truth: set[int] = set()
    matches = []
    for _, i, j in pairs:
        if i in used_pred or j in used_truth:
            continue
        used_pred.add(i)
        used_truth.add(j)
        matches.append((pred[i], truth[j]))
    tp = len(matches)
    return PeakMatchReport(tp=tp, fp=len(pred) - tp, fn=len(truth) - tp, matches=matches)


def brute_force_match(
    pred_positions: list[float], truth_positions: list[float], tol: float
) -> tuple[int, float]:
    """Exhaustive assignment oracle: maximum matches, then minimum total distance.

    Only suitable for small instances; used to validate the greedy matcher.
    """
    best_count = 0
    best_total = 0.0

    def recurse(i: int, used: set[int], count: int, total: float):
        nonlocal best_count, best_total
        remaining = len(pred_positions) - i
        if count + remaining < best_count:
            return
        if i == len(pred_positions):
            if count > best_count or (count == best_count and total < best_total):
                best_count, best_total = count, total
            return
        for j, t in enumerate(truth_positions):
            if j in used:
                continue
            d = abs(pred_positions[i] - t)
            if d <= tol:
                used.add(j)
                recurse(i + 1, used, count + 1, total + d)
                used.remove(j)
        recurse(i + 1, used, count, total)

    recurse(0, set(), 0, 0.0)
    return best_count, best_total


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class MetricSummary:
    macro: dict[str, tuple[float, float]]
    micro: dict[str, float]
    pooled_rie_mean: float
    pooled_rie_median: float


def _nan_mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    finite = arr[~np.isnan(arr)]
    if len(finite) == 0:
        return math.nan, math.nan
    return float(np.mean(finite)), float(np.std(finite))


def aggregate(reports: list[PeakMatchReport], floor: float = 1e-8) -> MetricSummary:
    """Macro (per-spectrum mean/std, NaN-ignoring) and micro (pooled counts)."""
    if not reports:
        raise EmptyInput("no reports to aggregate")
    macro = {
        "precision": _nan_mean_std([r.precision for r in reports]),
        "recall": _nan_mean_std([r.recall for r in reports]),
        "f1": _nan_mean_std([r.f1 for r in reports]),
        "mle_norm": _nan_mean_std([r.mle_norm for r in reports]),
        "rie_mean": _nan_mean_std([r.rie_mean(floor) for r in reports]),
        "rie_median": _nan_mean_std([r.rie_median(floor) for r in reports]),
    }
    tp = sum(r.tp for r in reports)
    fp = sum(r.fp for r in reports)
    fn = sum(r.fn for r in reports)
    precision = tp / (tp + fp) if (tp + fp) > 0 else math.nan
    recall = tp / (tp + fn) if (tp + fn) > 0 else math.nan
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom > 0 else math.nan
    micro = {"tp": tp, "fp": fp, "fn": fn, "precision": precision, "recall": recall, "f1": f1}
    pooled = [e for r in reports for e in r.intensity_errors(floor)]
    pooled_mean = float(np.mean(pooled)) if pooled else math.nan
    pooled_median = float(np.median(pooled)) if pooled else math.nan
    return MetricSummary(macro, micro, pooled_mean, pooled_median)


# ---------------------------------------------------------------------------
# whole-spectrum evaluation and report files


@dataclass
class SpectrumScores:
    mse: float
    psnr: float
    report: PeakMatchReport


def score_pair(pred: Spectrum, truth: Spectrum, params: PeakParams = PeakParams()) -> SpectrumScores:
    """MSE/PSNR plus the peak-aware report for one prediction."""
    pred_peaks = find_peaks(pred, params)
    truth_peaks = find_peaks(truth, params)
    report = match_peaks(pred_peaks, truth_peaks, params.match_tol, params.intensity_floor)
    return SpectrumScores(mse=mse(pred, truth), psnr=psnr(pred, truth), report=report)


def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if value == math.inf:
        return "inf"
    return format(value, ".10g")


def write_metrics_csv(
    path: str | Path,
    scores: list[SpectrumScores],
    params: PeakParams = PeakParams(),
    extra_columns: dict[str, list[float]] | None = None,
) -> MetricSummary:
    """Per-spectrum rows plus a summary block; returns the summary."""
    summary = aggregate([s.report for s in scores], params.intensity_floor)
    mses = [s.mse for s in scores]
    extra = extra_columns or {}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [
            "sample", "mse", "psnr", "tp", "fp", "fn",
            "precision", "recall", "f1", "mle", "rie_mean", "rie_median",
        ] + list(extra)
        writer.writerow(header)
        for i, s in enumerate(scores):
            r = s.report
            row = [
                i, _fmt(s.mse), _fmt(s.psnr), r.tp, r.fp, r.fn,
                _fmt(r.precision), _fmt(r.recall), _fmt(r.f1),
                _fmt(r.mle_norm), _fmt(r.rie_mean(params.intensity_floor)),
                _fmt(r.rie_median(params.intensity_floor)),
            ] + [_fmt(extra[k][i]) for k in extra]
            writer.writerow(row)
        writer.writerow([])
        writer.writerow(["summary", "metric", "value", "std"])
        writer.writerow(["summary", "mse_mean", _fmt(float(np.mean(mses))), _fmt(float(np.std(mses)))])
        psnrs = [s.psnr for s in scores if math.isfinite(s.psnr)]
        if psnrs:
            writer.writerow(
                ["summary", "psnr_mean", _fmt(float(np.mean(psnrs))), _fmt(float(np.std(psnrs)))]
            )
        for name, (mean, std) in summary.macro.items():
            writer.writerow(["summary", f"macro_{name}", _fmt(mean), _fmt(std)])
        for name in ("precision", "recall", "f1"):
            writer.writerow(["summary", f"micro_{name}", _fmt(summary.micro[name]), ""])
        writer.writerow(["summary", "micro_tp", summary.micro["tp"], ""])
        writer.writerow(["summary", "micro_fp", summary.micro["fp"], ""])
        writer.writerow(["summary", "micro_fn", summary.micro["fn"], ""])
        writer.writerow(["summary", "pooled_rie_mean", _fmt(summary.pooled_rie_mean), ""])
        writer.writerow(["summary", "pooled_rie_median", _fmt(summary.pooled_rie_median), ""])
    return summary
