"""Control and probe temporal modes.

A :class:`ControlProgram` is a coherent sum of :class:`ControlComponent`
terms, each of which is ``amplitude * envelope(tau) * gate(tau) *
modulation(tau) * exp(i * (frequency_offset * tau + phase))``.  Gates and
pulse trains are ideal square switches by default; an optional raised-cosine
edge of configurable rise time models finite AOM switching.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import GridResolutionError, InvalidArgumentError
from .model import FieldEnvelope, TimeGrid

__all__ = [
    "PulseTrainSpec",
    "ControlComponent",
    "ControlProgram",
    "pulse_train",
    "evaluate_program",
    "matched_probe",
    "envelope_samples",
    "gate_samples",
]

ENVELOPE_SHAPES = ("constant", "gaussian", "flattop")


@dataclass(frozen=True)
class PulseTrainSpec:
    """Square-wave on/off modulation.

    ``frequency`` is ordinary (Hz); ``phase`` is a fraction of a period;
    ``rise_time`` > 0 replaces the sharp edges by raised-cosine ramps.
    """

    frequency: float
    duty: float
    phase: float = 0.0
    rise_time: float = 0.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise InvalidArgumentError("pulse train frequency must be > 0")
        if not 0.0 < self.duty <= 1.0:
            raise InvalidArgumentError("duty must be in (0, 1]")
        if self.rise_time < 0:
            raise InvalidArgumentError("rise_time must be >= 0")


@dataclass(frozen=True)
class ControlComponent:
    amplitude: float
    frequency_offset: float = 0.0
    envelope: str = "constant"
    duration: float = 0.0          # FWHM for gaussian, full width for flattop
    center: float = 0.0
    phase: float = 0.0             # rad, relative phase at tau = 0
    gate: Tuple[Tuple[float, float], ...] = ()
    gate_rise_time: float = 0.0
    modulation: Optional[PulseTrainSpec] = None

    def __post_init__(self):
        if self.amplitude < 0:
            raise InvalidArgumentError("amplitude must be >= 0")
        if self.envelope not in ENVELOPE_SHAPES:
            raise InvalidArgumentError(f"unknown envelope shape {self.envelope!r}")
        if self.envelope != "constant" and self.duration <= 0:
            raise InvalidArgumentError("shaped envelopes need duration > 0")
        gate = tuple((float(a), float(b)) for a, b in self.gate)
        for t_on, t_off in gate:
            if not t_off > t_on:
                raise InvalidArgumentError("gate intervals need t_off > t_on")
        for (_, prev_off), (nxt_on, _) in zip(gate, gate[1:]):
            if nxt_on < prev_off:
                raise InvalidArgumentError("gate intervals must be sorted and disjoint")
        object.__setattr__(self, "gate", gate)


@dataclass(frozen=True)
class ControlProgram:
    components: Tuple[ControlComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidArgumentError("ControlProgram needs at least one component")
        object.__setattr__(self, "components", comps)

    def max_modulation_frequency(self) -> float:
        """Highest configured modulation frequency (Hz), 0 if cw."""
        return max(
            (c.modulation.frequency for c in self.components if c.modulation),
            default=0.0,
        )


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """Raised-cosine step from 0 to 1 over x in [-1/2, 1/2]."""
    return np.clip(0.5 * (1.0 + np.sin(np.pi * np.clip(x, -0.5, 0.5))), 0.0, 1.0)


def pulse_train(grid: TimeGrid, frequency: float, duty: float,
                phase: float = 0.0, rise_time: float = 0.0) -> FieldEnvelope:
    """Unit-amplitude square wave on ``grid``.

    Samples are 1 on the first ``duty`` fraction of each period (shifted by
    ``phase`` periods) and 0 otherwise.  The grid must sample the train with
    at least 16 points per period.
    """
    spec = PulseTrainSpec(frequency, duty, phase, rise_time)
    grid.require_resolves(frequency)
    return FieldEnvelope(grid, _train_samples(grid.tau, spec))


def _train_samples(tau: np.ndarray, spec: PulseTrainSpec) -> np.ndarray:
    if spec.duty == 1.0:
        return np.ones_like(tau, dtype=np.complex128)
    period = 1.0 / spec.frequency
    # the 1e-9 nudge settles float ties when samples land exactly on an
    # edge, so commensurate grids give the duty cycle exactly
    frac = (tau / period + spec.phase + 1e-9) % 1.0
    if spec.rise_time <= 0:
        on = (frac < spec.duty).astype(np.complex128)
        return on
    w = spec.rise_time / period  # rise time as a fraction of the period
    up = _smooth_step(frac / w)                # edge centred at frac = 0
    down = 1.0 - _smooth_step((frac - spec.duty) / w)
    # the next period's rising edge pokes below frac = 1; give it its own
    # falling edge at duty + 1 so it is not wiped by this period's `down`
    up_wrap = _smooth_step((frac - 1.0) / w)
    down_wrap = 1.0 - _smooth_step((frac - 1.0 - spec.duty) / w)
    return np.asarray(np.maximum(up * down, up_wrap * down_wrap),
                      dtype=np.complex128)


def envelope_samples(grid: TimeGrid, shape: str, duration: float,
                     center: float) -> np.ndarray:
    tau = grid.tau
    if shape == "constant":
        return np.ones_like(tau)
    if shape == "gaussian":
        return np.exp(-4.0 * np.log(2.0) * ((tau - center) / duration) ** 2)
    if shape == "flattop":
        return ((tau >= center - duration / 2) & (tau <= center + duration / 2)
                ).astype(float)
    raise InvalidArgumentError(f"unknown envelope shape {shape!r}")


def gate_samples(grid: TimeGrid, intervals: Sequence[Tuple[float, float]],
                 rise_time: float = 0.0) -> np.ndarray:
    """Indicator of the union of gate intervals; 1 everywhere if none given.

    With ``rise_time`` > 0 each edge is a raised-cosine ramp centred on the
    nominal switching instant, so the integrated on-time is preserved.
    """
    tau = grid.tau
    if not intervals:
        return np.ones_like(tau)
    out = np.zeros_like(tau)
    for t_on, t_off in intervals:
        if rise_time > 0:
            seg = (_smooth_step((tau - t_on) / rise_time)
                   * (1.0 - _smooth_step((tau - t_off) / rise_time)))
        else:
            seg = ((tau >= t_on) & (tau < t_off)).astype(float)
        out = np.maximum(out, seg)
    return out


def _component_samples(comp: ControlComponent, grid: TimeGrid) -> np.ndarray:
    tau = grid.tau
    out = comp.amplitude * envelope_samples(grid, comp.envelope, comp.duration,
                                            comp.center)
    out = out * gate_samples(grid, comp.gate, comp.gate_rise_time)
    if comp.modulation is not None:
        grid.require_resolves(comp.modulation.frequency)
        out = out * _train_samples(tau, comp.modulation)
    phase = comp.frequency_offset * tau + comp.phase
    if comp.frequency_offset != 0.0 or comp.phase != 0.0:
        return out * np.exp(1j * phase)
    return out.astype(np.complex128)


def evaluate_program(program: ControlProgram, grid: TimeGrid) -> FieldEnvelope:
    """Coherent sum of all components on ``grid``."""
    total = np.zeros(grid.n_samples, dtype=np.complex128)
    for comp in program.components:
        total += _component_samples(comp, grid)
    return FieldEnvelope(grid, total)


def matched_probe(control_mode: FieldEnvelope, envelope: FieldEnvelope) -> FieldEnvelope:
    """Probe whose fast temporal mode matches the control's.

    The control is normalised to unit peak and multiplied pointwise into the
    slow probe envelope; both fields must share one grid.
    """
    if control_mode.grid != envelope.grid:
        raise InvalidArgumentError("control_mode and envelope grids must match")
    peak = control_mode.peak()
    if peak == 0:
        raise InvalidArgumentError("control mode has zero amplitude")
    fast = control_mode.samples / peak
    return FieldEnvelope(envelope.grid, envelope.samples * fast,
                         envelope.carrier_offset)
