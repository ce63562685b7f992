import math

import numpy as np
import pytest
from scipy import ndimage

from fracvortex import PeriodicGrid, PlanarBox

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {line}")


def smooth_field(rng, shape, amplitude=0.5, width=3.0, wrap=True):
    """Gaussian-filtered white noise with max-norm ``amplitude``."""
    f = ndimage.gaussian_filter(rng.standard_normal(shape), width,
                                mode="wrap" if wrap else "constant")
    return amplitude * f / np.abs(f).max()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def cell_grid():
    return PeriodicGrid.square(2 * math.pi, 64)


@pytest.fixture
def small_box():
    return PlanarBox(8.0, 63)
