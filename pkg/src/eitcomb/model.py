"""Shared physical and numerical data types.

Unit conventions
----------------
All rates and frequencies are angular (rad/s) unless a name says otherwise.
Optical fields are represented by their complex Rabi-frequency envelopes
Omega(tau) on a uniform local-time grid, tau = t - z/c.  The single lumped
medium constant ``coupling_density`` (g, rad/(s*m)) multiplies the excited
state amplitude in the field propagation equation, so the resonant optical
depth is d = 4*g*L/Gamma and the control-off cw intensity transmission is
exp(-d).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "LambdaMedium",
    "TimeGrid",
    "FieldEnvelope",
    "SimulationGrid",
    "make_velocity_classes",
    "optical_depth",
    "effective_optical_depth",
]


@dataclass(frozen=True)
class LambdaMedium:
    """Atomic/medium parameters of the Lambda system.

    Parameters
    ----------
    gamma:
        Excited-state decay rate (rad/s).
    coupling_density:
        Lumped field-atom coupling constant g (rad/(s*m)).
    length:
        Cell length (m).
    inhomogeneous_width:
        FWHM of the one-photon detuning distribution (rad/s); 0 means
        homogeneous.
    detuning_profile:
        ``"gaussian"``, ``"lorentzian"`` or ``"none"``.
    ground_decoherence:
        Decay rate of the ground-state coherence (rad/s).  The ideal model
        has none; nonzero values are an explicit extension for storage-loss
        studies.
    """

    gamma: float
    coupling_density: float
    length: float
    inhomogeneous_width: float = 0.0
    detuning_profile: str = "none"
    ground_decoherence: float = 0.0

    def __post_init__(self):
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise InvalidArgumentError("gamma must be positive and finite")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise InvalidArgumentError("length must be positive and finite")
        if self.coupling_density < 0 or not np.isfinite(self.coupling_density):
            raise InvalidArgumentError("coupling_density must be >= 0 and finite")
        if self.inhomogeneous_width < 0:
            raise InvalidArgumentError("inhomogeneous_width must be >= 0")
        if self.ground_decoherence < 0:
            raise InvalidArgumentError("ground_decoherence must be >= 0")
        if self.detuning_profile not in ("gaussian", "lorentzian", "none"):
            raise InvalidArgumentError(
                f"unknown detuning_profile {self.detuning_profile!r}"
            )
        if self.inhomogeneous_width > 0 and self.detuning_profile == "none":
            raise InvalidArgumentError(
                "nonzero inhomogeneous_width requires a detuning_profile"
            )

    @property
    def optical_depth(self) -> float:
        return optical_depth(self)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform local-time grid tau in [t_start, t_end] with n_samples points."""

    t_start: float
    t_end: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise InvalidArgumentError("n_samples must be >= 2")
        if not self.t_end > self.t_start:
            raise InvalidArgumentError("t_end must exceed t_start")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_samples - 1)

    @property
    def span(self) -> float:
        return self.t_end - self.t_start

    @property
    def tau(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)

    def samples_per_period(self, frequency_hz: float) -> float:
        """Samples per period of an ordinary frequency (Hz)."""
        if frequency_hz <= 0:
            return np.inf
        return 1.0 / (frequency_hz * self.dt)

    def require_resolves(self, frequency_hz: float, min_samples: int = 16):
        """Raise unless ``frequency_hz`` is sampled >= min_samples per period."""
        from .errors import GridResolutionError

        got = self.samples_per_period(frequency_hz)
        if got < min_samples:
            raise GridResolutionError(
                f"frequency {frequency_hz:.6g} Hz sampled {got:.2f} times per "
                f"period; need >= {min_samples} (reduce dt={self.dt:.3e} s)"
            )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FieldEnvelope:
    """Complex Rabi-frequency samples Omega(tau) on a :class:`TimeGrid`.

    ``carrier_offset`` (rad/s) tags the frequency offset of this envelope's
    reference carrier from the nominal transition; fast per-component offsets
    are baked into the samples themselves by the waveform generators.
    """

    grid: TimeGrid
    samples: np.ndarray
    carrier_offset: float = 0.0

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.shape[0] != self.grid.n_samples:
            raise InvalidArgumentError(
                "samples must be a 1-d array of length grid.n_samples"
            )
        if not np.all(np.isfinite(samples.view(np.float64))):
            raise InvalidArgumentError("samples must be finite")
        object.__setattr__(self, "samples", _readonly(samples))

    def average_power(self) -> float:
        """Time-averaged |Omega|^2 over the grid (rad^2/s^2)."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def energy(self) -> float:
        """Integral of |Omega|^2 d tau (rad^2/s)."""
        return float(np.trapezoid(np.abs(self.samples) ** 2, dx=self.grid.dt))

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def centroid(self) -> float:
        """First moment of |Omega|^2 -- the energy arrival time (s)."""
        p = np.abs(self.samples) ** 2
        tot = p.sum()
        if tot <= 0:
            raise InvalidArgumentError("centroid of a zero field is undefined")
        return float((p * self.grid.tau).sum() / tot)

    def with_samples(self, samples: np.ndarray) -> "FieldEnvelope":
        return FieldEnvelope(self.grid, samples, self.carrier_offset)


@dataclass(frozen=True)
class SimulationGrid:
    """Discretisation of the cell and of the inhomogeneous line."""

    time: TimeGrid
    n_z_slices: int
    class_detunings: np.ndarray = field(default_factory=lambda: np.zeros(1))
    class_weights: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        if self.n_z_slices < 2:
            raise InvalidArgumentError("n_z_slices must be >= 2")
        det = np.ascontiguousarray(self.class_detunings, dtype=np.float64)
        w = np.ascontiguousarray(self.class_weights, dtype=np.float64)
        if det.shape != w.shape or det.ndim != 1:
            raise InvalidArgumentError(
                "class_detunings and class_weights must be 1-d arrays of equal length"
            )
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("class_weights must sum to 1 within 1e-12")
        object.__setattr__(self, "class_detunings", _readonly(det))
        object.__setattr__(self, "class_weights", _readonly(w))

    @property
    def n_velocity_classes(self) -> int:
        return self.class_detunings.shape[0]

    @classmethod
    def for_medium(cls, time: TimeGrid, n_z_slices: int, medium: LambdaMedium,
                   n_velocity_classes: int = 1) -> "SimulationGrid":
        det, w = make_velocity_classes(medium, n_velocity_classes)
        return cls(time, n_z_slices, det, w)


def make_velocity_classes(
    medium: LambdaMedium, n: int, method: str = "gauss-hermite"
) -> Tuple[np.ndarray, np.ndarray]:
    """Discretise the one-photon detuning distribution into ``n`` classes.

    Returns ``(detunings, weights)`` with weights summing to 1.  ``n`` must
    be odd so a class sits exactly on resonance.  For a gaussian profile the
    default is Gauss-Hermite quadrature (exact low moments); equal-weight
    stratified sampling of the CDF is available as ``method="stratified"``
    and is the only scheme offered for the heavy-tailed lorentzian.
    """
    if n < 1 or n % 2 == 0:
        raise InvalidArgumentError("n must be odd and >= 1")
    if medium.inhomogeneous_width == 0 or medium.detuning_profile == "none" or n == 1:
        return np.zeros(1), np.ones(1)

    fwhm = medium.inhomogeneous_width
    if medium.detuning_profile == "gaussian":
        sigma = fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        if method == "gauss-hermite":
            nodes, weights = np.polynomial.hermite_e.hermegauss(n)
            det = nodes * sigma
            w = weights / weights.sum()
        elif method == "stratified":
            from scipy.special import ndtri

            q = (np.arange(n) + 0.5) / n
            det = ndtri(q) * sigma
            w = np.full(n, 1.0 / n)
        else:
            raise InvalidArgumentError(f"unknown quadrature method {method!r}")
    else:  # lorentzian
        hwhm = fwhm / 2.0
        q = (np.arange(n) + 0.5) / n
        det = hwhm * np.tan(np.pi * (q - 0.5))
        w = np.full(n, 1.0 / n)

    # symmetrise exactly about zero detuning
    det = 0.5 * (det - det[::-1])
    w = 0.5 * (w + w[::-1])
    return det, w / w.sum()


def optical_depth(medium: LambdaMedium) -> float:
    """Resonant optical depth d = 4*g*L/Gamma (control off, homogeneous)."""
    return 4.0 * medium.coupling_density * medium.length / medium.gamma


def effective_optical_depth(
    medium: LambdaMedium,
    detunings: np.ndarray,
    weights: np.ndarray,
) -> float:
    """Velocity-averaged resonant depth.

    Each class of detuning Delta absorbs with the Lorentzian factor
    (Gamma/2)^2 / ((Gamma/2)^2 + Delta^2); at zero width this reduces to
    :func:`optical_depth`.
    """
    half = medium.gamma / 2.0
    factor = np.sum(weights * half**2 / (half**2 + np.asarray(detunings) ** 2))
    return optical_depth(medium) * float(factor)
