"""Scenario execution: solver orchestration, measurements, structured output.

A scenario couples a medium, a time grid, a control program and a probe spec
with a list of measurements.  Outputs are one CSV per measurement plus a
JSON summary per run; files contain no wall-clock or host information so
identical configs produce bit-identical outputs regardless of worker count.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import adiabatic, diagnostics
from .config import ScenarioConfig, parse_quantity, substitute_param
from .errors import EitError, ScenarioError
from .fullsolver import propagate_full, store_and_retrieve
from .model import FieldEnvelope, TimeGrid
from .waveforms import envelope_samples, evaluate_program, gate_samples, matched_probe

__all__ = ["RunRecord", "run_scenario", "run_sweep", "list_scenarios",
           "scenario_path", "build_probe", "config_hash"]

TWO_PI = 2.0 * np.pi


@dataclass
class RunRecord:
    name: str
    config_hash: str
    scalars: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None


def config_hash(raw: Dict[str, Any]) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_probe(config: ScenarioConfig, control_field: FieldEnvelope) -> FieldEnvelope:
    """Probe envelope from the scenario's probe spec.

    ``amplitude`` is the peak probe Rabi frequency; with ``matched: true``
    the probe is multiplied by the control's unit-peak fast mode.
    """
    spec = config.probe_spec
    grid = config.grid
    env = spec["amplitude"] * envelope_samples(
        grid, spec["shape"], spec["duration"], spec["center"])
    if spec["frequency_offset"]:
        env = env * np.exp(1j * spec["frequency_offset"] * grid.tau)
    probe = FieldEnvelope(grid, env)
    if spec["matched"]:
        probe = matched_probe(control_field, probe)
    return probe


def _crop(fieldv: FieldEnvelope, t_lo: float, t_hi: float) -> FieldEnvelope:
    tau = fieldv.grid.tau
    sel = (tau >= t_lo) & (tau <= t_hi)
    idx = np.flatnonzero(sel)
    if idx.size < 2:
        raise ScenarioError("analysis window contains fewer than 2 samples")
    sub = TimeGrid(float(tau[idx[0]]), float(tau[idx[-1]]), int(idx.size))
    return FieldEnvelope(sub, fieldv.samples[idx[0]:idx[-1] + 1],
                         fieldv.carrier_offset)


def _window(m: Dict[str, Any], grid: TimeGrid):
    t_lo = parse_quantity(m.get("analysis_start", f"{grid.t_start} s"), "time",
                          "measurement.analysis_start") if "analysis_start" in m \
        else grid.t_start
    t_hi = parse_quantity(m["analysis_end"], "time", "measurement.analysis_end") \
        if "analysis_end" in m else grid.t_end
    return t_lo, t_hi


def _color_component(fieldv: FieldEnvelope, offset: float, halfwidth: float
                     ) -> FieldEnvelope:
    """Band-pass one spectral colour out of a multi-colour envelope."""
    n = fieldv.grid.n_samples
    freqs = TWO_PI * np.fft.fftfreq(n, d=fieldv.grid.dt)
    spec = np.fft.fft(fieldv.samples)
    spec[np.abs(freqs - offset) > halfwidth] = 0.0
    return FieldEnvelope(fieldv.grid, np.fft.ifft(spec), fieldv.carrier_offset)


def _apply_measurement(m: Dict[str, Any], config: ScenarioConfig,
                       probe_in: FieldEnvelope, probe_out: FieldEnvelope,
                       control_field: FieldEnvelope, result, record: RunRecord,
                       prefix: str = ""):
    kind = m["kind"]
    key = prefix + m.get("label", kind)
    grid = config.grid
    t_lo, t_hi = _window(m, grid)
    out_w = _crop(probe_out, t_lo, t_hi)
    in_w = _crop(probe_in, t_lo, t_hi)

    if kind == "transmission":
        record.scalars[f"{key}.transmission"] = out_w.energy() / in_w.energy()
    elif kind == "zero_span":
        rbw = parse_quantity(m.get("rbw", "5 MHz"), "rate", "zero_span.rbw")
        p_out = diagnostics.zero_span_power(out_w, rbw)
        p_in = diagnostics.zero_span_power(in_w, rbw)
        record.scalars[f"{key}.zero_span_out"] = p_out
        record.scalars[f"{key}.zero_span_transmission"] = (
            p_out / p_in if p_in > 0 else 0.0)
    elif kind == "spectrum":
        rbw = parse_quantity(m.get("rbw", "30 kHz"), "rate", "spectrum.rbw")
        lo = parse_quantity(m.get("lo_offset", "0 rad_s"), "rate",
                            "spectrum.lo_offset")
        trace = diagnostics.heterodyne_spectrum(out_w, lo, rbw)
        norm = in_w.average_power()
        record.tables[key] = {
            "freq_Hz": trace.frequencies / TWO_PI,
            "power_rel": trace.power / norm if norm > 0 else trace.power,
        }
        record.scalars[f"{key}.rbw_Hz"] = rbw / TWO_PI
    elif kind == "delay":
        delay, v_local, v_lab = diagnostics.group_velocity_estimate(
            probe_out, probe_in, config.medium)
        record.scalars[f"{key}.delay_s"] = delay
        record.scalars[f"{key}.v_local_m_s"] = v_local
        record.scalars[f"{key}.v_lab_m_s"] = v_lab
    elif kind == "overlap":
        record.scalars[f"{key}.mode_overlap"] = diagnostics.mode_overlap(
            out_w, _crop(control_field, t_lo, t_hi))
    elif kind == "margins":
        rep = diagnostics.adiabaticity_check(probe_in, control_field,
                                             config.medium)
        record.scalars[f"{key}.margin_a"] = rep.margin_a
        record.scalars[f"{key}.margin_b"] = rep.margin_b
        record.scalars[f"{key}.margin_c"] = rep.margin_c
        record.scalars[f"{key}.T_s"] = rep.T
        record.scalars[f"{key}.T1_s"] = rep.T1
    elif kind == "conversion":
        halfwidth = parse_quantity(m.get("halfwidth", "20 MHz"), "rate",
                                   "conversion.halfwidth")
        colors = [parse_quantity(c, "rate", "conversion.colors")
                  for c in m.get("colors", ["0 rad_s"])]
        total_in = probe_in.energy()
        for ci, offset in enumerate(colors):
            comp = _color_component(probe_out, offset, halfwidth)
            e = comp.energy()
            record.scalars[f"{key}.color{ci}.offset_Hz"] = offset / TWO_PI
            record.scalars[f"{key}.color{ci}.efficiency"] = e / total_in
            record.scalars[f"{key}.color{ci}.centroid_s"] = (
                comp.centroid() if e > 0 else np.nan)
    elif kind == "storage":
        meta = getattr(result, "metadata", {}) or {}
        for k in ("storage_time", "retrieval_efficiency", "added_delay"):
            if k in meta:
                record.scalars[f"{key}.{k}"] = meta[k]
    else:  # pragma: no cover - validated at parse time
        raise ScenarioError(f"unknown measurement kind {kind!r}")


def _run_adiabatic(config: ScenarioConfig, probe_in, control_field):
    state = adiabatic.from_fields(probe_in, control_field)
    state = adiabatic.propagate(state, config.medium, config.medium.length)
    return adiabatic.to_probe(state, control_field)


def run_scenario(config: ScenarioConfig, out_dir: Optional[Path] = None,
                 resolution: str = "default") -> RunRecord:
    """Execute the scenario and optionally write its output files."""
    config = config.with_resolution(resolution)
    record = RunRecord(name=config.name, config_hash=config_hash(config.raw))
    record.provenance = {
        "n_samples": config.grid.n_samples,
        "n_z_slices": config.n_z_slices,
        "n_velocity_classes": config.n_velocity_classes,
        "solver": config.solver,
        "resolution": resolution,
    }
    grid = config.grid
    control_field = evaluate_program(config.control, grid)
    if config.storage:
        st = config.storage
        blocker = np.sqrt(1.0 - gate_samples(
            grid, [(st["t_off"], st["t_on"])], st["rise_time"]))
        control_gated = FieldEnvelope(grid, control_field.samples * blocker,
                                      control_field.carrier_offset)
    else:
        control_gated = control_field
    probe_in = build_probe(config, control_field)
    sim = config.simulation_grid()

    result_full = None
    out_full = None
    out_ad = None
    if config.solver in ("full", "both"):
        if config.storage:
            result_full = store_and_retrieve(
                probe_in, config.control, (config.storage["t_off"],
                                           config.storage["t_on"]),
                config.medium, sim, gate_rise_time=config.storage["rise_time"])
        else:
            result_full = propagate_full(probe_in, control_gated,
                                         config.medium, sim)
        out_full = result_full.probe_out
        for mk, mv in result_full.metadata.items():
            if isinstance(mv, (int, float)):
                record.provenance[f"full.{mk}"] = mv
    if config.solver in ("adiabatic", "both"):
        out_ad = _run_adiabatic(config, probe_in, control_gated)
    if config.solver == "both":
        num = np.linalg.norm(out_full.samples - out_ad.samples)
        den = np.linalg.norm(out_ad.samples)
        record.scalars["cross_solver_l2"] = float(num / den) if den > 0 else 0.0

    probe_out = out_full if out_full is not None else out_ad
    record.tables["probe_in"] = _envelope_table(probe_in)
    record.tables["probe_out"] = _envelope_table(probe_out)
    if config.solver == "both":
        record.tables["probe_out_adiabatic"] = _envelope_table(out_ad)

    for m in config.measurements:
        _apply_measurement(m, config, probe_in, probe_out, control_field,
                           result_full, record)

    if out_dir is not None:
        write_record(record, Path(out_dir))
    return record


def _envelope_table(fieldv: FieldEnvelope) -> Dict[str, np.ndarray]:
    peak = np.abs(fieldv.samples).max()
    norm = peak**2 if peak > 0 else 1.0
    return {
        "tau_s": fieldv.grid.tau,
        "re_rabi_rad_s": fieldv.samples.real,
        "im_rabi_rad_s": fieldv.samples.imag,
        "power_rel": np.abs(fieldv.samples) ** 2 / norm,
    }


def write_record(record: RunRecord, out_dir: Path) -> None:
    """One CSV per table plus summary.json; float repr keeps bit-exactness."""
    run_dir = out_dir / record.name
    run_dir.mkdir(parents=True, exist_ok=True)
    for name, table in sorted(record.tables.items()):
        cols = list(table.keys())
        arrays = [np.asarray(table[c]) for c in cols]
        path = run_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for row in zip(*arrays):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    summary = {
        "name": record.name,
        "config_hash": record.config_hash,
        "scalars": _jsonable(record.scalars),
        "provenance": _jsonable(record.provenance),
    }
    if record.error is not None:
        summary["error"] = record.error
    with open(run_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(d: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        if isinstance(v, float) and not np.isfinite(v):
            v = repr(v)
        out[k] = v
    return out


def _run_member(args) -> RunRecord:
    raw, member_name, out_dir, resolution = args
    cfg_dict = dict(raw)
    cfg_dict["name"] = member_name
    try:
        cfg = ScenarioConfig.from_dict(cfg_dict)
        return run_scenario(cfg, Path(out_dir) if out_dir else None, resolution)
    except EitError as exc:
        rec = RunRecord(name=member_name, config_hash=config_hash(cfg_dict),
                        error=f"{type(exc).__name__}: {exc}")
        if out_dir:
            write_record(rec, Path(out_dir))
        return rec


def run_sweep(config: ScenarioConfig, param: str, values: Sequence[Any],
              out_dir: Optional[Path] = None, workers: int = 1,
              resolution: str = "default") -> List[RunRecord]:
    """Run one independent scenario per sweep value.

    Members are isolated; a failing member is recorded and the sweep
    continues.  Results are ordered by the input value order regardless of
    the worker count, and a merged ``sweep_summary.csv`` collects every
    member's scalars.
    """
    if not values:
        raise ScenarioError("sweep needs at least one value")
    jobs = []
    for i, v in enumerate(values):
        raw = substitute_param(config.raw, param, v)
        jobs.append((raw, f"{config.name}__{i:03d}", out_dir, resolution))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_member, jobs))
    else:
        records = [_run_member(j) for j in jobs]
    if out_dir is not None:
        _write_sweep_summary(Path(out_dir), config.name, param, values, records)
    return records


def _write_sweep_summary(out_dir: Path, name: str, param: str,
                         values: Sequence[Any], records: List[RunRecord]):
    keys = sorted({k for r in records for k in r.scalars})
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}__sweep_summary.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,param,value," + ",".join(keys) + ",error\n")
        for i, (v, r) in enumerate(zip(values, records)):
            cells = [str(i), param, str(v)]
            for k in keys:
                val = r.scalars.get(k, "")
                cells.append(repr(float(val)) if isinstance(val, (int, float))
                             else str(val))
            cells.append(r.error or "")
            fh.write(",".join(cells) + "\n")


def list_scenarios() -> List[str]:
    root = resources.files("eitcomb").joinpath("data/scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def scenario_path(name: str) -> Path:
    path = resources.files("eitcomb").joinpath(f"data/scenarios/{name}.yaml")
    if not path.is_file():
        raise ScenarioError(f"unknown shipped scenario {name!r}; "
                            f"available: {', '.join(list_scenarios())}")
    return Path(str(path))
