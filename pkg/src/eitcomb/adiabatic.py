"""Ideal adiabatic propagation of the dark-state polariton.

In local-time coordinates the ground-state coherence obeys a variable-
coefficient advection equation whose characteristics move with the
instantaneous group velocity Vg(tau) = |Omega_c(tau)|^2 / g.  Propagation is
therefore exact up to interpolation: the coherence at depth z is the input
coherence evaluated at the characteristic origin tau0(tau) defined by
S(tau) - S(tau0) = z, where S is the running integral of Vg.  Gated-off
control makes Vg = 0 and the polariton stand still (storage).  This backend
has no absorption or adiabaticity breakdown by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import InvalidArgumentError, ModeMismatchError, WindowOverrunError
from .model import FieldEnvelope, LambdaMedium, TimeGrid

__all__ = ["PolaritonState", "from_fields", "propagate", "to_probe",
           "group_velocity", "characteristic_positions"]

CTRL_THRESHOLD = 1e-6   # fraction of peak |Omega_c| below which control counts as off
PROBE_THRESHOLD = 1e-9  # fraction of peak |Omega_p| below which probe counts as absent
SUPPORT_TOL = 1e-2      # amplitude fraction of peak |c_c| defining the
                        # polariton support (1e-4 of the peak energy density)
#: probe energy fraction allowed to sit where the control is off.  Isolated
#: beat nulls of a multi-colour control are measure-zero and must not abort
#: the mapping; sustained probe-without-control does.
MISMATCH_ENERGY_TOL = 1e-6


@dataclass(frozen=True)
class PolaritonState:
    """Ground-state coherence c_c(tau) plus the control that created it."""

    grid: TimeGrid
    c_c: np.ndarray
    control: FieldEnvelope

    def __post_init__(self):
        c = np.ascontiguousarray(self.c_c, dtype=np.complex128)
        if c.shape != (self.grid.n_samples,):
            raise InvalidArgumentError("c_c must match the grid length")
        if not np.all(np.isfinite(c.view(np.float64))):
            raise InvalidArgumentError("c_c must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "c_c", c)
        if self.control.grid != self.grid:
            raise InvalidArgumentError("control grid must match the state grid")

    def norm(self, medium: LambdaMedium) -> float:
        """Transported polariton norm: integral of |c_c|^2 Vg d tau."""
        vg = group_velocity(self.control, medium)
        return float(np.trapezoid(np.abs(self.c_c) ** 2 * vg, dx=self.grid.dt))


def _mask_intervals(tau: np.ndarray, mask: np.ndarray):
    """(t_lo, t_hi) spans where ``mask`` is True."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]]))
    return [(float(tau[a]), float(tau[b])) for a, b in zip(starts, ends)]


def from_fields(probe: FieldEnvelope, control: FieldEnvelope) -> PolaritonState:
    """Map the field pair to the dark-state coherence c_c = -Omega_p/Omega_c.

    Raises :class:`ModeMismatchError` when the probe carries power where the
    control is absent -- the adiabatic picture is ill-posed there.
    """
    if probe.grid != control.grid:
        raise InvalidArgumentError("probe and control grids must match")
    ctrl_abs = np.abs(control.samples)
    probe_abs = np.abs(probe.samples)
    eps_c = CTRL_THRESHOLD * (ctrl_abs.max() if ctrl_abs.max() > 0 else 1.0)
    eps_p = PROBE_THRESHOLD * probe_abs.max()
    bad = (probe_abs > eps_p) & (ctrl_abs <= eps_c) if probe_abs.max() > 0 else \
        np.zeros_like(probe_abs, dtype=bool)
    if np.any(bad):
        frac = (probe_abs[bad] ** 2).sum() / (probe_abs**2).sum()
        if frac > MISMATCH_ENERGY_TOL:
            raise ModeMismatchError(_mask_intervals(probe.grid.tau, bad))
    c_c = np.zeros(probe.grid.n_samples, dtype=np.complex128)
    ok = ctrl_abs > eps_c
    c_c[ok] = -probe.samples[ok] / control.samples[ok]
    return PolaritonState(probe.grid, c_c, control)


def group_velocity(control: FieldEnvelope, medium: LambdaMedium) -> np.ndarray:
    """Instantaneous local-time group velocity Vg(tau) = |Omega_c|^2/g."""
    if medium.coupling_density <= 0:
        raise InvalidArgumentError("propagation needs coupling_density > 0")
    return np.abs(control.samples) ** 2 / medium.coupling_density


def _running_distance(control: FieldEnvelope, medium: LambdaMedium) -> np.ndarray:
    vg = group_velocity(control, medium)
    return cumulative_trapezoid(vg, dx=control.grid.dt, initial=0.0)


def characteristic_positions(state: PolaritonState, medium: LambdaMedium,
                             at_time: float) -> np.ndarray:
    """Depth reached at ``at_time`` by the characteristic entering at each tau.

    Negative values mean the characteristic has not entered yet.
    """
    s = _running_distance(state.control, medium)
    tau = state.grid.tau
    s_t = np.interp(at_time, tau, s)
    return s_t - s


def propagate(state: PolaritonState, medium: LambdaMedium,
              distance: float) -> PolaritonState:
    """Advance the polariton by ``distance`` along the cell."""
    if not 0.0 <= distance <= medium.length:
        raise InvalidArgumentError("distance must lie in [0, medium.length]")
    if distance == 0.0:
        return state
    grid = state.grid
    s = _running_distance(state.control, medium)

    # window check: the trailing edge of the input support must still exit
    c_abs = np.abs(state.c_c)
    if c_abs.max() > 0:
        support = np.flatnonzero(c_abs > SUPPORT_TOL * c_abs.max())
        last = support[-1]
        deficit = distance - (s[-1] - s[last])
        if deficit > 0:
            vg_end = max(group_velocity(state.control, medium)[-1], 1e-300)
            raise WindowOverrunError(deficit / vg_end)

    # invert S(tau0) = S(tau) - distance; S is non-decreasing and flat during
    # storage, so take the left endpoint of flat segments (searchsorted left).
    target = s - distance
    tau = grid.tau
    idx = np.searchsorted(s, target, side="left")
    c_c_out = np.zeros_like(state.c_c)
    inside = (target >= s[0]) & (idx > 0)
    i = np.clip(idx[inside], 1, grid.n_samples - 1)
    s_lo, s_hi = s[i - 1], s[i]
    t = np.where(s_hi > s_lo, (target[inside] - s_lo) / np.where(s_hi > s_lo, s_hi - s_lo, 1.0), 0.0)
    tau0 = tau[i - 1] + t * grid.dt
    c_c_out[inside] = (np.interp(tau0, tau, state.c_c.real)
                       + 1j * np.interp(tau0, tau, state.c_c.imag))
    exact = target == s[0]
    c_c_out[exact] = state.c_c[0]
    return PolaritonState(grid, c_c_out, state.control)


def to_probe(state: PolaritonState, control_out: FieldEnvelope) -> FieldEnvelope:
    """Release the coherence onto an output control: Omega_p = -c_c * Omega_c.

    Using a frequency-shifted or multi-colour ``control_out`` implements
    adiabatic frequency conversion: the output probe inherits the control's
    spectral content.
    """
    if control_out.grid != state.grid:
        raise InvalidArgumentError("control_out grid must match the state grid")
    return FieldEnvelope(state.grid, -state.c_c * control_out.samples)
