"""Scenario configuration: strict unit-suffixed quantities in YAML.

Every physical quantity in a scenario file is a string ``"<value> <unit>"``;
bare numbers are rejected for physical fields because silent unit errors are
the dominant failure mode in physics configs.  Rates written in Hz/kHz/MHz/
GHz are ordinary frequencies and are converted to angular rad/s (times 2*pi)
wherever the target quantity is angular; ``rad_s`` passes through unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .errors import ScenarioError
from .model import LambdaMedium, SimulationGrid, TimeGrid, make_velocity_classes
from .waveforms import ControlComponent, ControlProgram, PulseTrainSpec

__all__ = [
    "parse_quantity",
    "ScenarioConfig",
    "load_config",
    "save_config",
    "substitute_param",
]

TWO_PI = 2.0 * math.pi

#: unit -> (kind, scale to SI / angular SI)
_UNITS = {
    "rad_s": ("rate", 1.0),
    "Hz": ("rate", TWO_PI),
    "kHz": ("rate", TWO_PI * 1e3),
    "MHz": ("rate", TWO_PI * 1e6),
    "GHz": ("rate", TWO_PI * 1e9),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
}

# ordinary-frequency (non-angular) view of rate units, for places where a
# plain Hz value is wanted (pulse-train frequency)
_HZ_SCALE = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}


def parse_quantity(value: Any, kind: str, where: str = "") -> float:
    """Parse ``"<number> <unit>"`` into SI (time, length) or rad/s (rate).

    ``kind`` is one of ``rate`` (angular), ``frequency_hz`` (ordinary Hz),
    ``time``, ``length``, ``dimensionless``.
    """
    loc = f" in {where}" if where else ""
    if kind == "dimensionless":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"expected a bare number{loc}, got {value!r}", where)
        return float(value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        raise ScenarioError(
            f"bare number {value!r}{loc}: physical quantities need a unit "
            "suffix, e.g. \"6 MHz\"", where)
    if not isinstance(value, str):
        raise ScenarioError(f"cannot parse quantity {value!r}{loc}", where)
    parts = value.split()
    if len(parts) != 2:
        raise ScenarioError(f"malformed quantity {value!r}{loc}", where)
    num_s, unit = parts
    try:
        num = float(num_s)
    except ValueError:
        raise ScenarioError(f"bad number in {value!r}{loc}", where) from None
    if kind == "frequency_hz":
        if unit not in _HZ_SCALE:
            raise ScenarioError(f"unit {unit!r}{loc} is not a frequency", where)
        return num * _HZ_SCALE[unit]
    if unit not in _UNITS:
        raise ScenarioError(f"unknown unit {unit!r}{loc}", where)
    got_kind, scale = _UNITS[unit]
    if got_kind != kind:
        raise ScenarioError(
            f"unit {unit!r}{loc} has kind {got_kind!r}, expected {kind!r}", where)
    return num * scale


_SENTINEL = object()


def _get(d: dict, key: str, where: str, default=_SENTINEL):
    if key in d:
        return d[key]
    if default is not _SENTINEL:
        return default
    raise ScenarioError(f"missing required key {where}.{key}", f"{where}.{key}")


MEASUREMENT_KINDS = ("spectrum", "zero_span", "delay", "overlap", "margins",
                     "conversion", "storage", "transmission")
SOLVERS = ("adiabatic", "full", "both")


@dataclass
class ScenarioConfig:
    """Validated scenario; ``raw`` keeps the exact parsed-file dict."""

    name: str
    raw: Dict[str, Any]
    medium: LambdaMedium
    grid: TimeGrid
    n_z_slices: int
    n_velocity_classes: int
    control: ControlProgram
    probe_spec: Dict[str, Any]
    solver: str
    measurements: List[Dict[str, Any]]
    sweep: Optional[Dict[str, Any]] = None
    storage: Optional[Dict[str, float]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ScenarioError("scenario config must be a mapping")
        name = _get(data, "name", "config")

        med = _get(data, "medium", "config")
        gamma = parse_quantity(_get(med, "gamma", "medium"), "rate", "medium.gamma")
        length = parse_quantity(_get(med, "length", "medium"), "length",
                                "medium.length")
        if "optical_depth" in med:
            d = parse_quantity(med["optical_depth"], "dimensionless",
                               "medium.optical_depth")
            coupling = d * gamma / (4.0 * length)
        else:
            coupling = parse_quantity(_get(med, "coupling_density", "medium"),
                                      "rate", "medium.coupling_density") / 1.0
            # coupling_density carries rad/(s*m); the rate parser handles the
            # angular scale, per-metre is implicit in the field name
        medium = LambdaMedium(
            gamma=gamma,
            coupling_density=coupling,
            length=length,
            inhomogeneous_width=parse_quantity(
                med.get("inhomogeneous_width", "0 rad_s"), "rate",
                "medium.inhomogeneous_width"),
            detuning_profile=med.get("detuning_profile", "none"),
            ground_decoherence=parse_quantity(
                med.get("ground_decoherence", "0 rad_s"), "rate",
                "medium.ground_decoherence"),
        )

        gd = _get(data, "grid", "config")
        grid = TimeGrid(
            parse_quantity(_get(gd, "t_start", "grid"), "time", "grid.t_start"),
            parse_quantity(_get(gd, "t_end", "grid"), "time", "grid.t_end"),
            int(parse_quantity(_get(gd, "n_samples", "grid"), "dimensionless",
                               "grid.n_samples")),
        )

        sd = _get(data, "sim", "config", {})
        n_z = int(parse_quantity(sd.get("n_z_slices", 64), "dimensionless",
                                 "sim.n_z_slices"))
        n_v = int(parse_quantity(sd.get("n_velocity_classes", 1),
                                 "dimensionless", "sim.n_velocity_classes"))

        cd = _get(data, "control", "config")
        comps = []
        for i, c in enumerate(_get(cd, "components", "control")):
            where = f"control.components.{i}"
            mod = None
            if c.get("modulation"):
                m = c["modulation"]
                mod = PulseTrainSpec(
                    frequency=parse_quantity(_get(m, "frequency", where),
                                             "frequency_hz", f"{where}.modulation.frequency"),
                    duty=parse_quantity(_get(m, "duty", where), "dimensionless",
                                        f"{where}.modulation.duty"),
                    phase=parse_quantity(m.get("phase", 0.0), "dimensionless",
                                         f"{where}.modulation.phase"),
                    rise_time=parse_quantity(m.get("rise_time", "0 s"), "time",
                                             f"{where}.modulation.rise_time"),
                )
            gate = tuple(
                (parse_quantity(a, "time", f"{where}.gate"),
                 parse_quantity(b, "time", f"{where}.gate"))
                for a, b in c.get("gate", ()))
            comps.append(ControlComponent(
                amplitude=parse_quantity(_get(c, "amplitude", where), "rate",
                                         f"{where}.amplitude"),
                frequency_offset=parse_quantity(c.get("frequency_offset", "0 rad_s"),
                                                "rate", f"{where}.frequency_offset"),
                envelope=c.get("envelope", "constant"),
                duration=parse_quantity(c.get("duration", "0 s"), "time",
                                        f"{where}.duration"),
                center=parse_quantity(c.get("center", "0 s"), "time",
                                      f"{where}.center"),
                phase=parse_quantity(c.get("phase", 0.0), "dimensionless",
                                     f"{where}.phase"),
                gate=gate,
                gate_rise_time=parse_quantity(c.get("gate_rise_time", "0 s"),
                                              "time", f"{where}.gate_rise_time"),
                modulation=mod,
            ))
        control = ControlProgram(tuple(comps))

        pd = _get(data, "probe", "config")
        probe_spec = {
            "shape": pd.get("shape", "gaussian"),
            "duration": parse_quantity(pd.get("duration", "0 s"), "time",
                                       "probe.duration"),
            "center": parse_quantity(pd.get("center", "0 s"), "time",
                                     "probe.center"),
            "amplitude": parse_quantity(_get(pd, "amplitude", "probe"), "rate",
                                        "probe.amplitude"),
            "matched": bool(pd.get("matched", False)),
            "frequency_offset": parse_quantity(pd.get("frequency_offset", "0 rad_s"),
                                               "rate", "probe.frequency_offset"),
        }

        solver = _get(data, "solver", "config", "full")
        if solver not in SOLVERS:
            raise ScenarioError(f"unknown solver {solver!r}", "solver")
        if solver == "adiabatic" and not probe_spec["matched"] \
                and probe_spec["shape"] == "constant" \
                and control.max_modulation_frequency() > 0:
            raise ScenarioError(
                "adiabatic solver rejects an unmatched probe against a "
                "modulated control; use solver=full", "solver")

        measurements = []
        for i, m in enumerate(data.get("measurements", [])):
            if isinstance(m, str):
                m = {"kind": m}
            kind = _get(m, "kind", f"measurements.{i}")
            if kind not in MEASUREMENT_KINDS:
                raise ScenarioError(f"unknown measurement kind {kind!r}",
                                    f"measurements.{i}.kind")
            measurements.append(dict(m))

        sweep = data.get("sweep")
        if sweep is not None:
            if not sweep.get("values"):
                raise ScenarioError("sweep.values must be non-empty", "sweep.values")
            _get(sweep, "param", "sweep")

        storage = None
        if data.get("storage"):
            st = data["storage"]
            storage = {
                "t_off": parse_quantity(_get(st, "t_off", "storage"), "time",
                                        "storage.t_off"),
                "t_on": parse_quantity(_get(st, "t_on", "storage"), "time",
                                       "storage.t_on"),
                "rise_time": parse_quantity(st.get("rise_time", "0 s"), "time",
                                            "storage.rise_time"),
            }

        return cls(name=name, raw=data, medium=medium, grid=grid,
                   n_z_slices=n_z, n_velocity_classes=n_v, control=control,
                   probe_spec=probe_spec, solver=solver,
                   measurements=measurements, sweep=sweep, storage=storage)

    def simulation_grid(self) -> SimulationGrid:
        det, w = make_velocity_classes(self.medium, self.n_velocity_classes)
        return SimulationGrid(self.grid, self.n_z_slices, det, w)

    def with_resolution(self, resolution: str) -> "ScenarioConfig":
        """coarse / default / fine: halve or double the grid resolutions."""
        factor = {"coarse": 0.5, "default": 1.0, "fine": 2.0}.get(resolution)
        if factor is None:
            raise ScenarioError(f"unknown resolution {resolution!r}")
        if factor == 1.0:
            return self
        raw = yaml.safe_load(yaml.safe_dump(self.raw))
        # scale the step count (n_samples - 1) so halving/doubling the
        # resolution halves/doubles dt exactly
        steps = int((raw["grid"]["n_samples"] - 1) * factor)
        raw["grid"]["n_samples"] = max(64, steps + 1)
        sim = raw.setdefault("sim", {})
        sim["n_z_slices"] = max(2, int(sim.get("n_z_slices", 64) * factor))
        return ScenarioConfig.from_dict(raw)


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return ScenarioConfig.from_dict(data)


def save_config(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.raw, fh, sort_keys=True)


def substitute_param(raw: Dict[str, Any], param: str, value: Any) -> Dict[str, Any]:
    """Deep-copy ``raw`` and replace the dotted ``param`` path with ``value``.

    List indices appear as bare integers in the path, e.g.
    ``control.components.0.amplitude``.
    """
    new = yaml.safe_load(yaml.safe_dump(raw))
    node = new
    keys = param.split(".")
    try:
        for k in keys[:-1]:
            node = node[int(k)] if isinstance(node, list) else node[k]
            if node is None:
                raise KeyError(k)
    except (KeyError, IndexError, ValueError, TypeError):
        raise ScenarioError(f"parameter path {param!r} not found", param) from None
    last = keys[-1]
    try:
        if isinstance(node, list):
            node[int(last)] = value
        else:
            if last not in node:
                raise KeyError(last)
            node[last] = value
    except (KeyError, IndexError, ValueError, TypeError):
        raise ScenarioError(f"parameter path {param!r} not found", param) from None
    return new
