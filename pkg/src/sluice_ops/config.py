"""Run configuration files.

YAML with flat dotted keys (``tide.mean: 6.1``); nested mappings are
flattened, so ``tide: {mean: 6.1}`` is equivalent. Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .discharge import LossCoefficients, LossTable
from .errors import DomainError, ParseError
from .flow_analysis import ResponseCurve
from .tide_control import Mode, PidGains, ScenarioConfig, SluiceSystem, Tide

HOUR = 3600.0

# key -> default; None means required
SYSTEM_KEYS: dict[str, Any] = {
    "a_lake": None,
    "q_river": None,
    "bays": None,
    "bay_width": None,
    "sill_level": None,
    "h_lake0": None,
    "tide.mean": None,
    "tide.amplitude": None,
    "tide.period_h": None,
    "a_max": math.inf,
    "w_in": None,
    "w_out": None,
    "losses.c_c_in": 0.9,
    "losses.xi_out": 1.0,
}
SCENARIO_KEYS: dict[str, Any] = {
    "scenario.mode": "pid",
    "scenario.m": None,
    "scenario.h_target": None,
    "scenario.tolerance": 0.02,
    "pid.kp": 0.5,
    "pid.ki": 0.1,
    "pid.kd": 0.0,
    "pid.ramp_s": 1800.0,
    "dt_s": 60.0,
    "cycles": 4,
    "planner.initial_cd": 0.6,
    "planner.model_cd": True,
    "planner.river_inflow": True,
}
PIPELINE_KEYS: dict[str, Any] = {
    "pipeline.m": None,             # list of gate counts; default 1..bays
    "pipeline.modes": ["constant_opening", "pid"],
    "pipeline.candidates": 1,
    "pipeline.modular_limit": 0.5,
    "thresholds.psi_max": None,
    "thresholds.relative_amplitude_max": None,
    "thresholds.fr_max": None,
    "analysis.alphas": [3.0, 6.0],
    "analysis.delta": 1.65,
    "analysis.f_range": [2.0, 5.0],
    "analysis.gate_bottom_L": None,
    "analysis.curves": [],          # list of {path, a_min, a_max, label}
    "analysis.field_dir": None,
    "analysis.grid_nx": 161,
    "analysis.grid_nz": 81,
}
ALL_KEYS = {**SYSTEM_KEYS, **SCENARIO_KEYS, **PIPELINE_KEYS}


def _flatten(data: dict, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and name not in ("analysis.curves",):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def builtin_config_path(name: str) -> Path:
    ref = resources.files("sluice_ops") / "data" / f"{name}.yaml"
    return Path(str(ref))


def read_config(path) -> dict[str, Any]:
    """Flat key/value dict with defaults filled in; relative paths resolved."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        p = builtin_config_path(str(path))
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(f"{p}: {exc}", line=None if line is None else line + 1) from exc
    except OSError as exc:
        raise ParseError(f"cannot read config {p}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError(f"{p}: top level must be a mapping")
    flat = _flatten(raw)
    unknown = sorted(set(flat) - set(ALL_KEYS))
    if unknown:
        raise ParseError(f"{p}: unknown keys: {', '.join(unknown)}")
    cfg = {k: flat.get(k, v) for k, v in ALL_KEYS.items()}
    cfg["_base_dir"] = p.parent
    return cfg


def _need(cfg: dict, key: str):
    if cfg.get(key) is None:
        raise ParseError(f"missing required key {key!r}")
    return cfg[key]


def _num(cfg: dict, key: str) -> float:
    v = _need(cfg, key)
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ParseError(f"{key} must be a number, got {v!r}") from None


def build_system(cfg: dict) -> SluiceSystem:
    try:
        losses = LossTable(default=LossCoefficients(_num(cfg, "losses.c_c_in"),
                                                    _num(cfg, "losses.xi_out")))
        tide = Tide(_num(cfg, "tide.mean"), _num(cfg, "tide.amplitude"),
                    _num(cfg, "tide.period_h") * HOUR)
        return SluiceSystem(
            a_lake=_num(cfg, "a_lake"),
            q_river=_num(cfg, "q_river"),
            n=int(_need(cfg, "bays")),
            w=_num(cfg, "bay_width"),
            sill_level=_num(cfg, "sill_level"),
            tide=tide,
            h_lake=_num(cfg, "h_lake0"),
            a_max=float(cfg["a_max"]) if cfg["a_max"] is not None else math.inf,
            w_in=None if cfg["w_in"] is None else float(cfg["w_in"]),
            w_out=None if cfg["w_out"] is None else float(cfg["w_out"]),
            losses=losses,
        )
    except DomainError as exc:
        raise ParseError(f"invalid system parameters: {exc}") from exc


def build_scenario(cfg: dict, system: SluiceSystem, mode: str | None = None,
                   m: int | None = None) -> ScenarioConfig:
    try:
        return ScenarioConfig(
            mode=Mode(mode or cfg["scenario.mode"]),
            m=int(m if m is not None else _need(cfg, "scenario.m")),
            h_target=_num(cfg, "scenario.h_target"),
            duration=float(cfg["cycles"]) * system.tide.period,
            gains=PidGains(_num(cfg, "pid.kp"), _num(cfg, "pid.ki"), _num(cfg, "pid.kd")),
            ramp_duration=_num(cfg, "pid.ramp_s"),
            dt=_num(cfg, "dt_s"),
            predicted_cd=_num(cfg, "planner.initial_cd"),
            target_tolerance=_num(cfg, "scenario.tolerance"),
            plan_river_inflow=bool(cfg["planner.river_inflow"]),
            model_cd=bool(cfg["planner.model_cd"]),
        )
    except ValueError as exc:  # DomainError and bad enum values
        raise ParseError(f"invalid scenario parameters: {exc}") from exc


@dataclass
class Thresholds:
    psi_max: float | None = None
    relative_amplitude_max: float | None = None
    fr_max: float | None = None

    def __post_init__(self):
        for name in ("psi_max", "relative_amplitude_max", "fr_max"):
            v = getattr(self, name)
            if v is not None and not float(v) > 0:
                raise DomainError(f"threshold {name} must be positive")

    def as_dict(self) -> dict:
        return {"psi_max": self.psi_max,
                "relative_amplitude_max": self.relative_amplitude_max,
                "fr_max": self.fr_max}


@dataclass
class PipelineConfig:
    system: SluiceSystem
    scenario_cfg: dict
    m_values: list[int]
    modes: list[Mode]
    thresholds: Thresholds
    out_dir: Path
    candidates: int = 1
    modular_limit: float = 0.5
    alphas: tuple[float, ...] = (3.0, 6.0)
    delta: float = 1.65
    f_range: tuple[float, float] = (2.0, 5.0)
    gate_bottom_L: float | None = None
    curves: list = field(default_factory=list)
    field_dir: Path | None = None
    grid: tuple[int, int] = (161, 81)

    def scenario(self, mode: Mode, m: int) -> ScenarioConfig:
        return build_scenario(self.scenario_cfg, self.system, mode.value, m)


def build_pipeline_config(cfg: dict, out_dir) -> PipelineConfig:
    system = build_system(cfg)
    base = cfg.get("_base_dir", Path("."))
    ms = cfg["pipeline.m"]
    m_values = list(range(1, system.n + 1)) if ms is None else [int(v) for v in ms]
    try:
        modes = [Mode(v) for v in cfg["pipeline.modes"]]
        th = Thresholds(cfg["thresholds.psi_max"], cfg["thresholds.relative_amplitude_max"],
                        cfg["thresholds.fr_max"])
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    curves = []
    for spec in cfg["analysis.curves"] or []:
        if not isinstance(spec, dict) or "path" not in spec:
            raise ParseError("each analysis.curves entry needs a 'path'")
        path = Path(spec["path"])
        if not path.is_absolute():
            path = base / path
        curves.append(ResponseCurve.from_csv(
            path, spec.get("label"),
            (float(spec.get("a_min", 0.0)), float(spec.get("a_max", math.inf)))))
    f_lo, f_hi = (float(v) for v in cfg["analysis.f_range"])
    field_dir = cfg["analysis.field_dir"]
    if field_dir is not None:
        field_dir = Path(field_dir)
        if not field_dir.is_absolute():
            field_dir = base / field_dir
    length = cfg["analysis.gate_bottom_L"]
    return PipelineConfig(
        system=system,
        scenario_cfg=cfg,
        m_values=m_values,
        modes=modes,
        thresholds=th,
        out_dir=Path(out_dir),
        candidates=int(cfg["pipeline.candidates"]),
        modular_limit=float(cfg["pipeline.modular_limit"]),
        alphas=tuple(float(a) for a in cfg["analysis.alphas"]),
        delta=float(cfg["analysis.delta"]),
        f_range=(f_lo, f_hi),
        gate_bottom_L=None if length is None else float(length),
        curves=curves,
        field_dir=field_dir,
        grid=(int(cfg["analysis.grid_nx"]), int(cfg["analysis.grid_nz"])),
    )
