"""Core spectral types and FFT primitives.

All spectra live on a normalized wavenumber axis spanning [0, 1].  The types
here are immutable after construction and safe to share between threads;
every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AllZeroSignal, LengthMismatch

DEFAULT_GRID_LENGTH = 1000


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WavenumberGrid:
    """Fixed normalized wavenumber axis with points ``i / (length - 1)``."""

    length: int = DEFAULT_GRID_LENGTH
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.length < 2:
            raise LengthMismatch(f"grid needs at least 2 points, got {self.length}")
        pts = np.arange(self.length, dtype=np.float64) / (self.length - 1)
        object.__setattr__(self, "points", _readonly(pts))

    def __eq__(self, other):
        return isinstance(other, WavenumberGrid) and other.length == self.length

    def __hash__(self):
        return hash(("WavenumberGrid", self.length))


@lru_cache(maxsize=8)
def default_grid(length: int = DEFAULT_GRID_LENGTH) -> WavenumberGrid:
    """Shared grid instance for the common lengths."""
    return WavenumberGrid(length)


@dataclass(frozen=True)
class Spectrum:
    """Real-valued signal sampled on a :class:`WavenumberGrid`.

    ``normalized`` is set when the values were scaled to peak 1 and are
    non-negative; it is informational and never required by operations.
    """

    grid: WavenumberGrid
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 1 or len(v) != self.grid.length:
            raise LengthMismatch(
                f"values length {v.shape} does not match grid length {self.grid.length}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum values must be finite")
        if self.normalized and (abs(float(np.max(v)) - 1.0) > 1e-12 or float(np.min(v)) < 0.0):
            raise ValueError("normalized spectra must have peak 1 and non-negative values")
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, normalized: bool = False) -> "Spectrum":
        return Spectrum(self.grid, values, normalized)


@dataclass(frozen=True)
class ComplexSpectrum:
    """Complex-valued susceptibility split into real and imaginary parts."""

    grid: WavenumberGrid
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = _readonly(self.re)
        im = _readonly(self.im)
        if re.shape != im.shape or len(re) != self.grid.length:
            raise LengthMismatch("re/im length must equal grid length")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise ValueError("susceptibility values must be finite")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.re, self.im)


@dataclass(frozen=True)
class SpectrumTriple:
    """One paired sample: measured CARS input plus ground-truth Raman and NRB."""

    cars: Spectrum
    raman: Spectrum
    nrb: Spectrum

    def __post_init__(self):
        if not (self.cars.grid == self.raman.grid == self.nrb.grid):
            raise LengthMismatch("cars/raman/nrb must share one grid")


def normalize(s: Spectrum) -> Spectrum:
    """Scale a spectrum so its maximum value equals 1.

    Raises :class:`AllZeroSignal` when the signal is identically zero.  The
    ``normalized`` flag is only set when the result is a valid normalized
    spectral shape (peak 1, non-negative values).
    """
    if float(np.max(np.abs(s.values))) == 0.0:
        raise AllZeroSignal("cannot normalize an all-zero spectrum")
    peak = float(np.max(s.values))
    if peak <= 0.0:
        raise AllZeroSignal("spectrum has no positive peak to scale to 1")
    values = s.values / peak
    flagged = bool(np.min(values) >= 0.0)
    return Spectrum(s.grid, values, normalized=flagged)


def fft_forward(x: np.ndarray) -> np.ndarray:
    """Unnormalized forward DFT of a real or complex vector."""
    x = np.asarray(x)
    if x.size == 0:
        raise LengthMismatch("fft of empty input")
    return np.fft.fft(x)


def fft_inverse(X: np.ndarray) -> np.ndarray:
    """Inverse DFT carrying the 1/N factor, so ``fft_inverse(fft_forward(x)) == x``."""
    X = np.asarray(X)
    if X.size == 0:
        raise LengthMismatch("ifft of empty input")
    return np.fft.ifft(X)
