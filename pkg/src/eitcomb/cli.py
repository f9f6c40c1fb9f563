"""Command line interface.

Commands: ``run``, ``validate``, ``sweep`` take a scenario config path (or
the name of a shipped scenario); ``list`` prints the shipped scenario set.
Failures exit nonzero with a machine-readable JSON error on stderr.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import ScenarioConfig, load_config
from .errors import EitError
from .scenarios import list_scenarios, run_scenario, run_sweep, scenario_path

RESOLUTIONS = ("coarse", "default", "fine")


def _fail(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    field = getattr(exc, "field", None)
    if field:
        payload["field"] = field
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def _load(config_arg: str) -> ScenarioConfig:
    path = Path(config_arg)
    if not path.exists():
        path = scenario_path(config_arg)
    return load_config(path)


@click.group()
def main():
    """Multimode-EIT simulator."""


@main.command("list")
def list_cmd():
    """List shipped scenarios."""
    for name in list_scenarios():
        click.echo(name)


@main.command()
@click.argument("config")
def validate(config):
    """Validate a scenario config and print its summary."""
    try:
        cfg = _load(config)
    except (EitError, OSError) as exc:
        _fail(exc)
    click.echo(f"{cfg.name}: ok (solver={cfg.solver}, "
               f"n_samples={cfg.grid.n_samples}, n_z={cfg.n_z_slices}, "
               f"d={cfg.medium.optical_depth:.3g})")


@main.command()
@click.argument("config")
@click.option("--out", type=click.Path(file_okay=False), default="out",
              show_default=True, help="Output directory.")
@click.option("--resolution", type=click.Choice(RESOLUTIONS), default="default",
              show_default=True)
@click.option("--workers", type=int, default=1, show_default=True,
              help="Worker processes for a config-declared sweep.")
def run(config, out, resolution, workers):
    """Run a scenario (including its config-declared sweep, if any)."""
    try:
        cfg = _load(config)
        if cfg.sweep:
            records = run_sweep(cfg, cfg.sweep["param"], cfg.sweep["values"],
                                Path(out), workers=workers,
                                resolution=resolution)
            failures = [r for r in records if r.error]
            click.echo(f"{cfg.name}: {len(records)} sweep members, "
                       f"{len(failures)} failed -> {out}")
            if failures:
                sys.exit(1)
        else:
            record = run_scenario(cfg, Path(out), resolution=resolution)
            for key in sorted(record.scalars):
                click.echo(f"{key} = {record.scalars[key]:.6g}")
            click.echo(f"{cfg.name}: ok -> {out}")
    except EitError as exc:
        _fail(exc)


@main.command()
@click.argument("config")
@click.option("--param", required=True, help="Dotted parameter path, e.g. "
              "control.components.0.amplitude")
@click.option("--values", required=True,
              help="Comma-separated replacement values; quantities keep "
              "their unit suffix, e.g. '1 MHz,2 MHz'.")
@click.option("--out", type=click.Path(file_okay=False), default="out",
              show_default=True)
@click.option("--resolution", type=click.Choice(RESOLUTIONS), default="default",
              show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
def sweep(config, param, values, out, resolution, workers):
    """Sweep one parameter over a list of values."""
    try:
        cfg = _load(config)
        parsed = []
        for v in values.split(","):
            v = v.strip()
            try:
                parsed.append(float(v) if "." in v or "e" in v.lower()
                              else int(v))
            except ValueError:
                parsed.append(v)
        records = run_sweep(cfg, param, parsed, Path(out), workers=workers,
                            resolution=resolution)
        failures = [r for r in records if r.error]
        click.echo(f"{cfg.name}: {len(records)} sweep members, "
                   f"{len(failures)} failed -> {out}")
        if failures:
            sys.exit(1)
    except EitError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
