"""Multimode-EIT simulator.

Propagation of arbitrarily modulated probe pulses through a Lambda-type
atomic medium under a temporally complex control field: comb-windowed
transparency, Procrustean mode filtering, broadband delay and storage, and
adiabatic frequency conversion.  Two backends are provided: a direct
Maxwell-Bloch integrator (``fullsolver``) and the exact ideal-adiabatic
polariton map (``adiabatic``).
"""
from .model import (
    FieldEnvelope,
    LambdaMedium,
    SimulationGrid,
    TimeGrid,
    make_velocity_classes,
    optical_depth,
)
from .waveforms import (
    ControlComponent,
    ControlProgram,
    PulseTrainSpec,
    evaluate_program,
    matched_probe,
    pulse_train,
)

__version__ = "0.1.0"

__all__ = [
    "FieldEnvelope",
    "LambdaMedium",
    "SimulationGrid",
    "TimeGrid",
    "make_velocity_classes",
    "optical_depth",
    "ControlComponent",
    "ControlProgram",
    "PulseTrainSpec",
    "evaluate_program",
    "matched_probe",
    "pulse_train",
    "__version__",
]
