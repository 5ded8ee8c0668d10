import numpy as np
import pytest

from rampinn import GenConfig, default_grid, generate_dataset


@pytest.fixture(scope="session")
def grid1000():
    return default_grid(1000)


@pytest.fixture(scope="session")
def clean_samples():
    """Noise-free synthetic triples shared by oracle tests."""
    cfg = GenConfig(seed=202, n_samples=40, noise_range=(0.0, 0.0))
    return generate_dataset(cfg)


def lorentzian_parts(grid_points: np.ndarray, amplitude: float, center: float, width: float):
    """Closed-form real/imaginary parts of one Lorentzian susceptibility."""
    delta = center - grid_points
    den = delta * delta + width * width
    return amplitude * delta / den, amplitude * width / den
