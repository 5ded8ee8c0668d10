"""rampinn: physics-informed recovery of Raman spectra from CARS measurements.

The package provides:

- spectral types on a normalized wavenumber grid (:mod:`rampinn.spectra`)
- a synthetic paired-sample generator (:mod:`rampinn.synth`)
- the discrete Hilbert transform, Kramers-Kronig targets and a classical
  phase-retrieval baseline (:mod:`rampinn.hilbert`)
- a minimal reverse-mode autodiff engine (:mod:`rampinn.nn`)
- the dual-decoder reconstruction network, physics losses and training loop
  (:mod:`rampinn.model`)
- reconstruction and peak-aware evaluation metrics (:mod:`rampinn.metrics`)
- an experiment CLI (:mod:`rampinn.cli`), also exposed as ``rampinn``
"""

from .errors import (
    AllZeroSignal,
    BadWindow,
    DegenerateBackground,
    EmptyInput,
    LengthMismatch,
    NonFiniteGradient,
    NonPositiveReference,
    RamPinnError,
    ShapeMismatch,
)
from .hilbert import (
    HilbertFilter,
    analytic_signal,
    classical_kk_retrieve,
    hilbert_adjoint,
    hilbert_filter,
    hilbert_imag,
    kk_target,
)
from .metrics import (
    MetricSummary,
    Peak,
    PeakMatchReport,
    PeakParams,
    aggregate,
    find_peaks,
    match_peaks,
    mse,
    psnr,
    savitzky_golay,
    score_pair,
)
from .model import (
    ArrayDataset,
    RamPinnConfig,
    RamPinnModel,
    TrainHistory,
    dataset_from_samples,
    loss_kk,
    loss_smooth,
    loss_total,
    predict,
    train,
)
from .spectra import (
    ComplexSpectrum,
    Spectrum,
    SpectrumTriple,
    WavenumberGrid,
    default_grid,
    fft_forward,
    fft_inverse,
    normalize,
)
from .synth import (
    GenConfig,
    LorentzianPeak,
    NrbModel,
    Sample,
    assemble_cars,
    generate_dataset,
    generate_sample,
    inject_artifacts,
    nrb_curve,
    read_dataset,
    sample_nrb,
    sample_resonant,
    write_dataset,
)

__version__ = "0.1.0"
