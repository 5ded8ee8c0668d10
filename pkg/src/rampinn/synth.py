"""Synthetic CARS/Raman/NRB sample generation.

Each sample pairs a measured CARS spectrum with the ground-truth Raman
spectrum and non-resonant background (NRB) it was built from.  Resonances
are sums of random Lorentzians; backgrounds are double-sigmoid or polynomial
curves; the CARS intensity is the squared modulus of their coherent sum with
additive per-point Gaussian noise.

Determinism: sample ``i`` of a run draws from an rng seeded with
``(seed, i)``, so serial and parallel generation produce identical bytes.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .errors import DegenerateBackground
from .spectra import (
    ComplexSpectrum,
    Spectrum,
    SpectrumTriple,
    WavenumberGrid,
    default_grid,
    normalize,
)

PEAK_AMPLITUDE_RANGE = (0.01, 1.0)
PEAK_WIDTH_RANGE = (0.001, 0.02)
SIGMOID_STEEPNESS = (10.0, 5.0)       # mean, std
SIGMOID_CENTERS = ((0.2, 0.3), (0.7, 0.3))
POLY_BASE_SMALL = (-1.0, 1.0)         # quartic and quadratic coefficients
POLY_BASE_LARGE = (-10.0, 10.0)       # cubic, linear, constant coefficients
ARTIFACT_WIDTH_RANGE = (0.002, 0.01)
ARTIFACT_HEIGHT_RANGE = (0.05, 0.5)
_DEGENERATE_SPAN = 1e-12
_MAX_RESAMPLES = 16


@dataclass(frozen=True)
class LorentzianPeak:
    """One Raman mode: amplitude, center and half-width on the unit axis."""

    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if not (PEAK_AMPLITUDE_RANGE[0] <= self.amplitude <= PEAK_AMPLITUDE_RANGE[1]):
            raise ValueError(f"amplitude {self.amplitude} outside {PEAK_AMPLITUDE_RANGE}")
        if not (0.0 <= self.center <= 1.0):
            raise ValueError(f"center {self.center} outside [0, 1]")
        if not (PEAK_WIDTH_RANGE[0] <= self.width <= PEAK_WIDTH_RANGE[1]):
            raise ValueError(f"width {self.width} outside {PEAK_WIDTH_RANGE}")

    def susceptibility(self, omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Real and imaginary parts of A / (center - omega - i*width)."""
        delta = self.center - omega
        den = delta * delta + self.width * self.width
        return self.amplitude * delta / den, self.amplitude * self.width / den


@dataclass(frozen=True)
class NrbModel:
    """Parametric background: a double-sigmoid product or a polynomial.

    Exactly one parameter set is meaningful, selected by ``kind``.
    Polynomial coefficients are ordered from the constant term upward.
    """

    kind: str  # "sigmoid" | "poly"
    b1: float = 0.0
    b2: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("sigmoid", "poly"):
            raise ValueError(f"unknown NRB kind {self.kind!r}")

    def evaluate(self, grid: WavenumberGrid) -> np.ndarray:
        """Raw curve on the grid, before any rescaling."""
        w = grid.points
        if self.kind == "sigmoid":
            return expit(self.b1 * (w - self.c1)) * expit(-self.b2 * (w - self.c2))
        return np.polynomial.polynomial.polyval(w, np.asarray(self.coeffs))


def nrb_curve(model: NrbModel, grid: WavenumberGrid) -> np.ndarray:
    """Evaluate a background model and map it into [0, 1].

    Sigmoid products already live in (0, 1); polynomial curves are min-max
    rescaled so their shape is kept but the range matches the normalized
    intensity convention.  Raises :class:`DegenerateBackground` for curves
    that are constant to within 1e-12.
    """
    raw = model.evaluate(grid)
    span = float(np.max(raw) - np.min(raw))
    if span < _DEGENERATE_SPAN:
        raise DegenerateBackground(f"background curve is constant (span {span:.3g})")
    if model.kind == "poly":
        return (raw - np.min(raw)) / span
    return raw


@dataclass(frozen=True)
class GenConfig:
    """Configuration of the synthetic sample generator."""

    seed: int = 0
    n_samples: int = 1
    peak_count_range: tuple[int, int] = (1, 25)
    noise_range: tuple[float, float] = (0.0005, 0.003)
    nrb_kind_probability: float = 0.5  # P(sigmoid)
    max_poly_degree: int = 4
    injected_artifact_peaks: int = 0
    grid_length: int = 1000

    def __post_init__(self):
        lo, hi = self.peak_count_range
        if not (1 <= lo <= hi):
            raise ValueError(f"bad peak_count_range {self.peak_count_range}")
        nlo, nhi = self.noise_range
        if not (0.0 <= nlo <= nhi):
            raise ValueError(f"bad noise_range {self.noise_range}")
        if not (0.0 <= self.nrb_kind_probability <= 1.0):
            raise ValueError("nrb_kind_probability must lie in [0, 1]")
        if self.max_poly_degree < 1:
            raise ValueError("max_poly_degree must be >= 1")
        if self.injected_artifact_peaks < 0:
            raise ValueError("injected_artifact_peaks must be >= 0")
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")

    def grid(self) -> WavenumberGrid:
        return default_grid(self.grid_length)


@dataclass(frozen=True)
class Sample:
    """A generated triple plus the metadata recorded in dataset files."""

    triple: SpectrumTriple
    seed: int
    index: int
    n_peaks: int
    nrb_kind: str
    artifact_peaks: int = 0


def sample_resonant(
    rng: np.random.Generator,
    grid: WavenumberGrid,
    peak_count_range: tuple[int, int] = (1, 25),
) -> tuple[ComplexSpectrum, list[LorentzianPeak]]:
    """Draw a random resonant susceptibility as a sum of Lorentzian modes.

    The result is scaled so ``max |chi| == 1``; the imaginary part is
    non-negative everywhere because every mode contributes positively.
    """
    lo, hi = peak_count_range
    count = int(rng.integers(lo, hi + 1))
    peaks = []
    re = np.zeros(grid.length)
    im = np.zeros(grid.length)
    for _ in range(count):
        peak = LorentzianPeak(
            amplitude=float(rng.uniform(*PEAK_AMPLITUDE_RANGE)),
            center=float(rng.uniform(0.0, 1.0)),
            width=float(rng.uniform(*PEAK_WIDTH_RANGE)),
        )
        peaks.append(peak)
        pre, pim = peak.susceptibility(grid.points)
        re += pre
        im += pim
    scale = float(np.max(np.hypot(re, im)))
    return ComplexSpectrum(grid, re / scale, im / scale), peaks


def sample_nrb(
    rng: np.random.Generator, grid: WavenumberGrid, cfg: GenConfig
) -> tuple[Spectrum, NrbModel]:
    """Draw a background curve, resampling a few times if it is degenerate."""
    last_error: DegenerateBackground | None = None
    for _ in range(_MAX_RESAMPLES):
        if rng.uniform() < cfg.nrb_kind_probability:
            model = NrbModel(
                kind="sigmoid",
                b1=float(rng.normal(*SIGMOID_STEEPNESS)),
                b2=float(rng.normal(*SIGMOID_STEEPNESS)),
                c1=float(rng.normal(*SIGMOID_CENTERS[0])),
                c2=float(rng.normal(*SIGMOID_CENTERS[1])),
            )
        else:
            # constant term upward: e, d, c, b, a then any higher-degree terms
            coeffs = [
                float(rng.uniform(*POLY_BASE_LARGE)),
                float(rng.uniform(*POLY_BASE_LARGE)),
                float(rng.uniform(*POLY_BASE_SMALL)),
                float(rng.uniform(*POLY_BASE_LARGE)),
                float(rng.uniform(*POLY_BASE_SMALL)),
            ][: cfg.max_poly_degree + 1]
            for _ in range(5, cfg.max_poly_degree + 1):
                coeffs.append(float(rng.uniform(*POLY_BASE_SMALL)))
            model = NrbModel(kind="poly", coeffs=tuple(coeffs))
        try:
            curve = nrb_curve(model, grid)
        except DegenerateBackground as err:
            last_error = err
            continue
        return Spectrum(grid, curve), model
    raise last_error if last_error is not None else DegenerateBackground("no sample drawn")


def assemble_cars(
    chi: ComplexSpectrum,
    nrb: Spectrum,
    rng: np.random.Generator,
    noise_range: tuple[float, float] = (0.0005, 0.003),
) -> SpectrumTriple:
    """Combine resonance and background into a normalized CARS triple.

    The raw intensity is ``(Re chi + nrb)^2 + (Im chi)^2``.  A per-sample
    noise amplitude is drawn from ``noise_range`` and applied as per-point
    additive Gaussian noise before clipping at zero and scaling to peak 1.
    The stored NRB is the squared background intensity under the same scale,
    so ``cars ~= nrb`` wherever the resonance vanishes.
    """
    if chi.grid != nrb.grid:
        raise ValueError("chi and nrb must share one grid")
    raw = (chi.re + nrb.values) ** 2 + chi.im**2
    sigma = float(rng.uniform(*noise_range))
    if sigma > 0.0:
        raw = raw + rng.normal(0.0, sigma, size=raw.shape)
    raw = np.maximum(raw, 0.0)
    peak = float(np.max(raw))
    cars = Spectrum(chi.grid, raw / peak, normalized=True)
    nrb_stored = Spectrum(chi.grid, nrb.values**2 / peak)
    if float(np.max(chi.im)) > 0.0:
        raman = normalize(Spectrum(chi.grid, chi.im))
    else:
        raman = Spectrum(chi.grid, chi.im)  # no resonances: zero Raman truth
    return SpectrumTriple(cars=cars, raman=raman, nrb=nrb_stored)


def inject_artifacts(
    triple: SpectrumTriple, rng: np.random.Generator, k: int
) -> SpectrumTriple:
    """Add ``k`` random Gaussian bumps to the CARS input only.

    Ground-truth Raman and NRB are kept untouched; the perturbed CARS input
    is re-normalized to peak 1.
    """
    if k < 0:
        raise ValueError("artifact count must be >= 0")
    if k == 0:
        return triple
    w = triple.cars.grid.points
    values = triple.cars.values.copy()
    for _ in range(k):
        center = rng.uniform(0.0, 1.0)
        width = rng.uniform(*ARTIFACT_WIDTH_RANGE)
        height = rng.uniform(*ARTIFACT_HEIGHT_RANGE)
        values += height * np.exp(-0.5 * ((w - center) / width) ** 2)
    cars = normalize(Spectrum(triple.cars.grid, values))
    return SpectrumTriple(cars=cars, raman=triple.raman, nrb=triple.nrb)


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def generate_sample(cfg: GenConfig, index: int) -> Sample:
    """Generate the deterministic sample at ``index`` for this config."""
    rng = _sample_rng(cfg.seed, index)
    grid = cfg.grid()
    chi, peaks = sample_resonant(rng, grid, cfg.peak_count_range)
    nrb, model = sample_nrb(rng, grid, cfg)
    triple = assemble_cars(chi, nrb, rng, cfg.noise_range)
    if cfg.injected_artifact_peaks > 0:
        triple = inject_artifacts(triple, rng, cfg.injected_artifact_peaks)
    return Sample(
        triple=triple,
        seed=cfg.seed,
        index=index,
        n_peaks=len(peaks),
        nrb_kind=model.kind,
        artifact_peaks=cfg.injected_artifact_peaks,
    )


def generate_dataset(cfg: GenConfig, threads: int = 1) -> list[Sample]:
    """Generate ``cfg.n_samples`` samples, reproducibly for a fixed seed."""
    indices = range(cfg.n_samples)
    if threads > 1 and cfg.n_samples > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda i: generate_sample(cfg, i), indices))
    return [generate_sample(cfg, i) for i in indices]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def sample_to_json_line(sample: Sample) -> str:
    """Serialize one sample to the dataset line format (17 significant digits)."""
    t = sample.triple
    parts = [
        '{"cars":[' + ",".join(_fmt(v) for v in t.cars.values) + "]",
        '"raman":[' + ",".join(_fmt(v) for v in t.raman.values) + "]",
        '"nrb":[' + ",".join(_fmt(v) for v in t.nrb.values) + "]",
        '"meta":' + json.dumps(
            {
                "seed": sample.seed,
                "index": sample.index,
                "n_peaks": sample.n_peaks,
                "nrb_kind": sample.nrb_kind,
                "artifact_peaks": sample.artifact_peaks,
            },
            separators=(",", ":"),
        )
        + "}",
    ]
    return ",".join(parts)


def write_dataset(samples: Iterable[Sample], path: str | Path) -> int:
    """Write samples as JSON lines; returns the number of lines written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(sample_to_json_line(sample))
            fh.write("\n")
            count += 1
    return count


def read_dataset(path: str | Path, grid_length: int = 1000) -> list[Sample]:
    """Read a JSON-lines dataset written by :func:`write_dataset`."""
    grid = default_grid(grid_length)
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            meta = obj.get("meta", {})
            triple = SpectrumTriple(
                cars=Spectrum(grid, np.asarray(obj["cars"]), normalized=True),
                raman=Spectrum(grid, np.asarray(obj["raman"]), normalized=True),
                nrb=Spectrum(grid, np.asarray(obj["nrb"])),
            )
            samples.append(
                Sample(
                    triple=triple,
                    seed=int(meta.get("seed", 0)),
                    index=int(meta.get("index", len(samples))),
                    n_peaks=int(meta.get("n_peaks", 0)),
                    nrb_kind=str(meta.get("nrb_kind", "sigmoid")),
                    artifact_peaks=int(meta.get("artifact_peaks", 0)),
                )
            )
    return samples
