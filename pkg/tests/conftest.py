import numpy as np
import pytest

from eitcomb.model import FieldEnvelope, LambdaMedium, SimulationGrid, TimeGrid

GAMMA = 2 * np.pi * 6e6


def medium_for_depth(d, length=0.12, **kw):
    """LambdaMedium with optical depth d (g = d*Gamma/(4L))."""
    return LambdaMedium(
        gamma=GAMMA,
        coupling_density=d * GAMMA / (4.0 * length),
        length=length,
        **kw,
    )


def cw_field(grid, amplitude):
    return FieldEnvelope(grid, np.full(grid.n_samples, amplitude, dtype=complex))


def gaussian_field(grid, amplitude, fwhm, center):
    x = (grid.tau - center) / fwhm
    return FieldEnvelope(grid, amplitude * np.exp(-4 * np.log(2) * x**2) + 0j)


@pytest.fixture
def grid_20us():
    return TimeGrid(0.0, 20e-6, 2048)


@pytest.fixture
def grid_51us():
    return TimeGrid(0.0, 51.2e-6, 4096)


def sim_for(medium, grid, n_z=100, n_classes=1):
    return SimulationGrid.for_medium(grid, n_z, medium, n_classes)
