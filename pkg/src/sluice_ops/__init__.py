"""Discharge, operation and scour analysis for a multi-bay sluice with
submerged vertical-lift gates."""

from .discharge import (
    DischargeSolution,
    GateGeometry,
    LossCoefficients,
    LossTable,
    Regime,
    contraction_coefficient,
    discharge_coefficient,
    solve_discharge,
)
from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleOpeningError,
    NoSolutionError,
    ParseError,
    ZeroHeadError,
)
from .flow_analysis import analyze_field, psi_profile
from .flowfield import FlowField, load_flow_field, synth_jet_field
from .gate_config import GateConfiguration, count_configs, enumerate_configs, total_configs
from .tide_control import Mode, PidGains, ScenarioConfig, SluiceSystem, Tide, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DischargeSolution", "DomainError", "FlowField",
    "GateConfiguration", "GateGeometry", "InfeasibleOpeningError", "LossCoefficients",
    "LossTable", "Mode", "NoSolutionError", "ParseError", "PidGains", "Regime",
    "ScenarioConfig", "SluiceSystem", "Tide", "ZeroHeadError", "analyze_field",
    "contraction_coefficient", "count_configs", "discharge_coefficient",
    "enumerate_configs", "load_flow_field", "psi_profile", "run_scenario",
    "solve_discharge", "synth_jet_field", "total_configs",
]
