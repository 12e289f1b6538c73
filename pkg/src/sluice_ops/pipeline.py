"""Simulate every gate count in both operation modes, analyse the feasible
scenarios at their maximum-head instant and rank them."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .config import PipelineConfig
from .discharge import solve_discharge
from .errors import DomainError
from .flow_analysis import analyze_field, save_psi_profiles
from .flowfield import GridSpec, load_flow_field, synth_jet_field
from .tide_control import ScenarioError, ScenarioTimeSeries, run_scenario

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NO_FEASIBLE = 2
EXIT_SOLVER_FAILURE = 3

TARGET_UNMET = "target_unmet"
MODULAR_DOMINATED = "modular_dominated"
SOLVER_FAILURE = "solver_failure"


@dataclass
class ScenarioReport:
    label: str
    mode: str
    m: int
    feasible: bool
    causes: list[dict] = field(default_factory=list)   # {"cause", "scenario"}
    target_met: bool | None = None
    modular_fraction: float | None = None
    v_tot: float | None = None
    achieved_cd: float | None = None
    run: dict | None = None         # state at the maximum-head instant
    metrics: dict | None = None     # flow analysis
    thresholds: dict = field(default_factory=dict)  # name -> True/False/None

    @property
    def pass_count(self) -> int:
        return sum(1 for v in self.thresholds.values() if v is True)

    @property
    def psi_max(self) -> float:
        if not self.metrics or not self.metrics.get("psi_max"):
            return math.inf
        return max(self.metrics["psi_max"].values())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def compare_scenarios(reports) -> list[ScenarioReport]:
    """Feasible first, then more thresholds passed, then lower peak Psi,
    then fewer gates, then mode name."""
    return sorted(reports, key=lambda r: (not r.feasible, -r.pass_count, r.psi_max,
                                          r.m, r.mode))


@dataclass
class PipelineResult:
    reports: list[ScenarioReport]
    ranking: list[str]
    exit_code: int
    series: dict[str, ScenarioTimeSeries]
    files: list[Path]


# ---------------------------------------------------------------------------

def _own_causes(ts: ScenarioTimeSeries, modular_limit: float) -> list[str]:
    causes = []
    if not ts.target_met:
        causes.append(TARGET_UNMET)
    if ts.modular_fraction > modular_limit:
        causes.append(MODULAR_DOMINATED)
    return causes


def _max_head_state(cfg: PipelineConfig, ts: ScenarioTimeSeries) -> dict | None:
    rec = ts.max_head_record()
    if rec is None or rec.a <= 0:
        return None
    system = cfg.system
    geom = system.geometry(rec.a)
    sol = solve_discharge(rec.h_lake - system.sill_level, rec.h_sea - system.sill_level,
                          geom, system.losses.for_gates(ts.scenario.m))
    lv = sol.levels
    return {
        "t": rec.t,
        "h_lake": rec.h_lake,
        "h_sea": rec.h_sea,
        "a": rec.a,
        "h0": lv.h0, "h1": lv.h1, "h2": lv.h2, "h3": lv.h3, "h4": lv.h4,
        "q_gate": sol.q_effective,
        "q_total": rec.q_total,
        "c_c": sol.c_c,
        "c_d": sol.c_d,
        "regime": sol.regime.value,
    }


def _field_for(cfg: PipelineConfig, label: str, run: dict):
    if cfg.field_dir is not None:
        f = cfg.field_dir / f"{label}_field.csv"
        s = cfg.field_dir / f"{label}_surface.csv"
        if f.exists():
            return load_flow_field(f, s if s.exists() else None), "file"
    nx, nz = cfg.grid
    fld = synth_jet_field(run["h1"], run["h3"], run["a"], run["c_c"], run["q_gate"],
                          cfg.system.w, GridSpec(nx=nx, nz=nz))
    return fld, "synthetic"


def _threshold_verdicts(cfg: PipelineConfig, metrics: dict | None) -> dict:
    th = cfg.thresholds
    out: dict[str, bool | None] = {}
    psi = max(metrics["psi_max"].values()) if metrics and metrics.get("psi_max") else None
    amp = metrics.get("relative_amplitude") if metrics else None
    fr = metrics.get("Fr") if metrics else None
    if th.psi_max is not None:
        out["psi_max"] = None if psi is None else psi <= th.psi_max
    if th.relative_amplitude_max is not None:
        out["relative_amplitude_max"] = None if amp is None else amp[1] <= th.relative_amplitude_max
    if th.fr_max is not None:
        out["fr_max"] = None if fr is None else fr <= th.fr_max
    return out


def _write_timeseries(ts: ScenarioTimeSeries, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "h_lake", "h_sea", "a", "Q_total", "regime"])
        for r in ts.records:
            wr.writerow([repr(r.t), repr(r.h_lake), repr(r.h_sea), repr(r.a),
                         repr(r.q_total), r.regime])


def run_pipeline(cfg: PipelineConfig, plots: bool = True) -> PipelineResult:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    series: dict[str, ScenarioTimeSeries] = {}
    reports: list[ScenarioReport] = []
    solver_failed = False

    for m in cfg.m_values:
        for mode in cfg.modes:
            sc = cfg.scenario(mode, m)
            rep = ScenarioReport(sc.label, mode.value, m, feasible=False)
            try:
                ts = run_scenario(cfg.system, sc)
            except (ScenarioError, DomainError) as exc:
                log.warning("%s: %s", sc.label, exc)
                solver_failed = solver_failed or isinstance(exc, ScenarioError)
                rep.causes.append({"cause": SOLVER_FAILURE, "scenario": sc.label,
                                   "detail": str(exc)})
                reports.append(rep)
                continue
            series[sc.label] = ts
            rep.target_met = ts.target_met
            rep.modular_fraction = ts.modular_fraction
            rep.v_tot = ts.v_tot
            rep.achieved_cd = ts.achieved_cd
            rep.causes = [{"cause": c, "scenario": sc.label}
                          for c in _own_causes(ts, cfg.modular_limit)]
            reports.append(rep)

    # a gate count is rejected when any of its operation modes is
    by_m: dict[int, list[dict]] = {}
    for rep in reports:
        by_m.setdefault(rep.m, []).extend(rep.causes)
    for rep in reports:
        own = {c["scenario"] for c in rep.causes}
        rep.causes = rep.causes + [c for c in by_m[rep.m] if c["scenario"] not in own]
        rep.feasible = not rep.causes

    psi_csv = []
    for rep in reports:
        ts = series.get(rep.label)
        if ts is not None:
            path = out / f"timeseries_{rep.label}.csv"
            _write_timeseries(ts, path)
            files.append(path)
        if not rep.feasible or ts is None:
            continue
        run = _max_head_state(cfg, ts)
        if run is None:
            continue
        rep.run = run
        fld, source = _field_for(cfg, rep.label, run)
        res = analyze_field(fld, cfg.alphas, cfg.delta, h2=run["h2"], f_range=cfg.f_range,
                            length=cfg.gate_bottom_L, curves=cfg.curves)
        metrics = res.to_dict()
        metrics["field_source"] = source
        path = out / f"psi_{rep.label}.csv"
        save_psi_profiles(res.psi, path)
        files.append(path)
        psi_csv.append((rep.label, res.psi))
        metrics["psi_profile"] = path.name
        rep.metrics = metrics
        rep.thresholds = _threshold_verdicts(cfg, metrics)

    ranked = compare_scenarios(reports)
    ranking = [r.label for r in ranked]
    if solver_failed:
        code = EXIT_SOLVER_FAILURE
    elif not any(r.feasible for r in reports):
        code = EXIT_NO_FEASIBLE
    else:
        code = EXIT_OK

    doc = {
        "generated": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "exit_code": code,
        "thresholds": cfg.thresholds.as_dict(),
        "modular_limit": cfg.modular_limit,
        "scenarios": [r.to_dict() for r in reports],
        "ranking": ranking,
    }
    path = out / "report.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    files.append(path)
    path = out / "report.md"
    path.write_text(render_markdown(doc, ranked))
    files.append(path)

    if plots and series:
        from .plotting import plot_gate_series, plot_levels, plot_psi
        files.append(plot_levels(series, out / "levels.png"))
        feasible = {r.label: series[r.label] for r in reports if r.feasible and r.label in series}
        if feasible:
            files.append(plot_gate_series(feasible, cfg.system.tide.period, out / "gates.png"))
        if psi_csv:
            files.append(plot_psi(psi_csv, out / "psi.png"))
    return PipelineResult(reports, ranking, code, series, files)


def _f(v, spec=".3f") -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return format(v, spec)


def render_markdown(doc: dict, ranked: list[ScenarioReport]) -> str:
    lines = ["# Gate operation report", "",
             f"Exit code: {doc['exit_code']}", ""]
    th = {k: v for k, v in doc["thresholds"].items() if v is not None}
    if th:
        lines.append("Thresholds: " + ", ".join(f"{k} = {v}" for k, v in th.items()))
        lines.append("")
    lines += ["## Ranking", "",
              "| rank | scenario | feasible | thresholds passed | max Psi | V_tot (m3) |",
              "|---:|---|---|---:|---:|---:|"]
    for n, r in enumerate(ranked, 1):
        psi = None if math.isinf(r.psi_max) else r.psi_max
        lines.append(f"| {n} | {r.label} | {_f(r.feasible)} | {r.pass_count} | "
                     f"{_f(psi)} | {_f(r.v_tot, '.4g')} |")
    lines += ["", "## Scenarios", "",
              "| scenario | target met | modular fraction | achieved C_D | causes |",
              "|---|---|---:|---:|---|"]
    for r in sorted(ranked, key=lambda r: (r.m, r.mode)):
        causes = "; ".join(f"{c['cause']} ({c['scenario']})" for c in r.causes) or "-"
        lines.append(f"| {r.label} | {_f(r.target_met)} | {_f(r.modular_fraction, '.2f')} | "
                     f"{_f(r.achieved_cd)} | {causes} |")
    analysed = [r for r in ranked if r.metrics]
    if analysed:
        lines += ["", "## Flow analysis at maximum head", "",
                  "| scenario | t (h) | a (m) | Q per gate | C_c | U_vc | Fr | Vr range | A/A_max |",
                  "|---|---:|---:|---:|---:|---:|---:|---|---|"]
        for r in sorted(analysed, key=lambda r: (r.m, r.mode)):
            mt, run = r.metrics, r.run
            vr = mt.get("Vr_range")
            amp = mt.get("relative_amplitude")
            lines.append(
                f"| {r.label} | {run['t'] / 3600:.2f} | {run['a']:.3f} | {run['q_gate']:.1f} | "
                f"{_f(mt.get('C_c'))} | {_f(mt.get('U_vc'))} | {_f(mt.get('Fr'))} | "
                f"{'-' if not vr else f'{vr[0]:.2f}-{vr[1]:.2f}'} | "
                f"{'-' if not amp else f'{amp[0]:.2f}-{amp[1]:.2f}'} |")
        lines += ["", "Psi profiles: `psi_<scenario>.csv`; time series: "
                  "`timeseries_<scenario>.csv`; figures: `levels.png`, `gates.png`, `psi.png`."]
    return "\n".join(lines) + "\n"
