"""Discrete Hilbert transform, Kramers-Kronig targets, and the classical
phase-retrieval baseline.

The transform is the FFT analytic-signal construction: multiply the spectrum
by a one-sided frequency mask and take the imaginary part of the inverse
transform.  It assumes periodic extension of the signal, so slowly decaying
tails (Lorentzian real parts) leak across the boundary; oracle tolerances in
the tests exclude 5% margins for that reason.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import LengthMismatch, NonPositiveReference
from .spectra import ComplexSpectrum, Spectrum, WavenumberGrid, default_grid, normalize


@dataclass(frozen=True)
class HilbertFilter:
    """One-sided frequency multiplier of the analytic-signal construction."""

    length: int
    multiplier: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.length
        if n < 2:
            raise LengthMismatch(f"filter needs length >= 2, got {n}")
        h = np.zeros(n, dtype=np.complex128)
        h[0] = 1.0
        if n % 2 == 0:
            h[n // 2] = 1.0
            h[1 : n // 2] = 2.0
        else:
            h[1 : (n + 1) // 2] = 2.0
        h.setflags(write=False)
        object.__setattr__(self, "multiplier", h)


@lru_cache(maxsize=16)
def hilbert_filter(length: int) -> HilbertFilter:
    return HilbertFilter(length)


def hilbert_imag(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Discrete Hilbert transform (imaginary part of the analytic signal).

    Works on a vector or along ``axis`` of a batch of vectors.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[axis]
    h = hilbert_filter(n).multiplier
    shape = [1] * values.ndim
    shape[axis] = n
    z = np.fft.ifft(np.fft.fft(values, axis=axis) * h.reshape(shape), axis=axis)
    return z.imag


def analytic_signal(r: np.ndarray | Spectrum) -> ComplexSpectrum:
    """Analytic signal of a real vector: ``z = IFFT(FFT(r) * H_f)``.

    The real part reproduces the input; the imaginary part is its discrete
    Hilbert transform.
    """
    if isinstance(r, Spectrum):
        grid, values = r.grid, r.values
    else:
        values = np.asarray(r, dtype=np.float64)
        if values.ndim != 1 or len(values) < 2:
            raise LengthMismatch("analytic_signal needs a real vector of length >= 2")
        grid = default_grid(len(values))
    h = hilbert_filter(grid.length).multiplier
    z = np.fft.ifft(np.fft.fft(values) * h)
    return ComplexSpectrum(grid, z.real, z.imag)


def kk_target(x: Spectrum, nrb_hat: Spectrum) -> Spectrum:
    """Kramers-Kronig-consistent resonant target for a background estimate.

    Subtracts the background estimate from the measured spectrum and returns
    the imaginary part of the analytic signal of the residual.
    """
    if x.grid != nrb_hat.grid:
        raise LengthMismatch("x and nrb_hat must share one grid")
    residual = x.values - nrb_hat.values
    return Spectrum(x.grid, hilbert_imag(residual))


def hilbert_adjoint(g: np.ndarray) -> np.ndarray:
    """Transpose of the discrete Hilbert transform, for reverse-mode gradients.

    The operator matrix is antisymmetric (its circular kernel is odd because
    the frequency multiplier is real), so the adjoint is its negation.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim < 1 or g.shape[-1] < 2:
        raise LengthMismatch("hilbert_adjoint needs vectors of length >= 2")
    return -hilbert_imag(g)


def classical_kk_retrieve(
    cars: Spectrum, nrb_ref: Spectrum, epsilon: float = 1e-6
) -> Spectrum:
    """Classical single-pass phase retrieval given a background reference.

    Forms the normalized intensity ``S = cars / max(nrb_ref, epsilon)``,
    retrieves the phase as the Hilbert transform of ``ln(sqrt(S))`` and
    returns the normalized imaginary part ``sqrt(S) * sin(phi)``.
    """
    if cars.grid != nrb_ref.grid:
        raise LengthMismatch("cars and nrb_ref must share one grid")
    ref = nrb_ref.values
    if float(np.mean(ref <= 0.0)) > 0.5:
        raise NonPositiveReference("reference spectrum is non-positive on >50% of points")
    s_ratio = cars.values / np.maximum(ref, epsilon)
    log_amp = 0.5 * np.log(np.maximum(s_ratio, epsilon))
    phase = hilbert_imag(log_amp)
    estimate = np.sqrt(np.maximum(s_ratio, 0.0)) * np.sin(phase)
    result = Spectrum(cars.grid, estimate)
    if float(np.max(np.abs(estimate))) == 0.0:
        return result
    return normalize(result)
