"""Command-line interface: ``sluice-ops <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 no feasible scenario, 3 solver
failure during a scenario run.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .config import (
    build_pipeline_config,
    build_scenario,
    build_system,
    read_config,
)
from .discharge import GateGeometry, LossCoefficients, solve_discharge
from .errors import ConvergenceError, DomainError, ParseError
from .flow_analysis import (
    DEFAULT_ALPHAS,
    DELTA_QUARRY_STONE,
    GateDynamics,
    ResponseCurve,
    analyze_field,
    natural_frequency,
    save_psi_profiles,
)
from .flowfield import load_flow_field, synth_jet_field
from .gate_config import count_configs, enumerate_configs, total_configs
from .pipeline import EXIT_SOLVER_FAILURE, run_pipeline
from .tide_control import ScenarioError, run_scenario

log = logging.getLogger("sluice_ops")

EXIT_INPUT = 1


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------

def cmd_configs(args) -> int:
    n, m = args.bays, args.open
    if m is None:
        counts = {k: count_configs(n, k, args.symmetric) for k in range(n + 1)}
        total = total_configs(n, args.symmetric)
        payload = {"n": n, "symmetric": args.symmetric, "total": total,
                   "by_open": {str(k): v for k, v in counts.items()}}
        lines = [f"total={total}"] + [f"m={k} count={v}" for k, v in counts.items()]
        _emit(args, payload, "\n".join(lines))
        return 0
    count = count_configs(n, m, args.symmetric)
    patterns = [str(c) for c in enumerate_configs(n, m, args.symmetric)]
    payload = {"n": n, "m": m, "symmetric": args.symmetric, "count": count,
               "configurations": patterns}
    _emit(args, payload, "\n".join([f"count={count}"] + patterns))
    return 0


def _read_losses(path) -> dict:
    """c_c_in, xi_out and optional w_in, w_out from a small YAML mapping."""
    import yaml

    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a mapping")
    unknown = set(data) - {"c_c_in", "xi_out", "w_in", "w_out"}
    if unknown:
        raise ParseError(f"{path}: unknown keys: {', '.join(sorted(unknown))}")
    return {k: float(v) for k, v in data.items()}


def cmd_discharge(args) -> int:
    spec = {"c_c_in": args.c_c_in, "xi_out": args.xi_out, "w_in": args.w_in,
            "w_out": args.w_out}
    if args.losses:
        spec.update(_read_losses(args.losses))
    geom = GateGeometry(args.width, args.opening, spec["w_in"], spec["w_out"])
    losses = LossCoefficients(spec["c_c_in"], spec["xi_out"])
    sol = solve_discharge(args.h0, args.h4, geom, losses)
    lv = sol.levels
    record = {"Q": sol.q_effective, "Q_submerged": sol.q_total, "Q_MF": sol.q_mf,
              "regime": sol.regime.value, "h0": lv.h0, "h1": lv.h1, "h2": lv.h2,
              "h3": lv.h3, "h4": lv.h4, "C_c": sol.c_c, "C_D": sol.c_d,
              "residual": sol.residual}
    text = "\n".join(f"{k}={v!r}" if not isinstance(v, str) else f"{k}={v}"
                     for k, v in record.items())
    _emit(args, record, text)
    return 0


def cmd_simulate(args) -> int:
    cfg = read_config(args.config)
    system = build_system(cfg)
    scenario = build_scenario(cfg, system, args.mode, args.m)
    ts = run_scenario(system, scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "timeseries.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "h_lake", "h_sea", "a", "Q_total", "regime"])
        for r in ts.records:
            wr.writerow([repr(r.t), repr(r.h_lake), repr(r.h_sea), repr(r.a),
                         repr(r.q_total), r.regime])
    summary = ts.summary()
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.no_plots:
        from .plotting import plot_gate_series, plot_levels
        plot_levels({scenario.label: ts}, out / "levels.png")
        plot_gate_series({scenario.label: ts}, system.tide.period, out / "gates.png")
    cd = summary["achieved_cd"]
    text = (f"{scenario.label}: V_tot = {ts.v_tot:.4g} m3, target met: {ts.target_met}, "
            f"modular fraction = {ts.modular_fraction:.2f}, "
            f"achieved C_D = {'-' if cd is None else f'{cd:.3f}'}\n"
            f"wrote {out / 'timeseries.csv'} and {out / 'summary.json'}")
    _emit(args, summary, text)
    return 0


def _load_curves(specs) -> list[ResponseCurve]:
    curves = []
    for spec in specs or []:
        # path[:a_min:a_max]
        parts = spec.split(":")
        lo = float(parts[1]) if len(parts) > 1 and parts[1] else 0.0
        hi = float(parts[2]) if len(parts) > 2 and parts[2] else math.inf
        curves.append(ResponseCurve.from_csv(parts[0], a_range=(lo, hi)))
    return curves


def cmd_analyze(args) -> int:
    if args.synthetic:
        h1, h3, a, c_c, q, w = args.synthetic
        field = synth_jet_field(h1, h3, a, c_c, q, w, gate_x=args.gate_x or 0.0)
    elif args.field:
        field = load_flow_field(args.field, args.surface, gate_x=args.gate_x, a=args.opening)
    else:
        raise ParseError("give --field or --synthetic")
    if args.opening is not None and args.synthetic:
        raise ParseError("--opening applies to --field input only")

    f_range = tuple(args.f_range) if args.f_range else None
    f_gate = None
    if args.stiffness is not None or args.mass is not None:
        if args.stiffness is None or args.mass is None or args.thickness is None:
            raise ParseError("--stiffness, --mass and --thickness go together")
        dyn = GateDynamics(args.stiffness, args.mass, args.thickness,
                           args.added_stiffness, args.added_mass)
        f_gate = natural_frequency(dyn)
        if f_range is None:
            f_range = (f_gate, f_gate)
    curves = _load_curves(args.curve)
    res = analyze_field(field, args.alpha or DEFAULT_ALPHAS, args.delta, h2=args.h2,
                        f_range=f_range, length=args.thickness, curves=curves)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = res.to_dict()
    d["f_gate"] = f_gate
    d["psi_x_max"] = {f"{p.alpha:g}": p.x_max for p in res.psi}
    d["psi_profile"] = "psi_profile.csv"
    (out / "analysis.json").write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
    save_psi_profiles(res.psi, out / "psi_profile.csv")
    if not args.no_plots:
        from .plotting import plot_analysis
        plot_analysis(field, res.psi, out / "analysis.png")

    def f(v, spec=".4f"):
        return "-" if v is None else format(v, spec)

    lines = [f"C_c = {f(res.c_c)}  x_vc = {f(res.x_vc)} m  U_vc = {f(res.u_vc)} m/s  "
             f"Fr = {f(res.froude)}"]
    if f_gate is not None:
        lines.append(f"f = {f_gate:.4f} Hz")
    if res.vr_range:
        lines.append(f"Vr = {res.vr_range[0]:.3f} .. {res.vr_range[1]:.3f}")
    if res.relative_amplitude:
        lines.append(f"A/A_max = {res.relative_amplitude[0]:.3f} .. "
                     f"{res.relative_amplitude[1]:.3f}")
    for p in res.psi:
        lines.append(f"alpha = {p.alpha:g}: max Psi = {p.max_psi:.4f} at x = {f(p.x_max, '.3f')} m")
    lines += res.notes
    _emit(args, d, "\n".join(lines))
    return 0


def cmd_pipeline(args) -> int:
    cfg = build_pipeline_config(read_config(args.config), args.out)
    result = run_pipeline(cfg, plots=not args.no_plots)
    payload = {"exit_code": result.exit_code, "ranking": result.ranking,
               "files": [str(p) for p in result.files]}
    lines = [f"{n}. {label}" for n, label in enumerate(result.ranking, 1)]
    lines.append(f"report: {Path(args.out) / 'report.md'}")
    _emit(args, payload, "\n".join(lines))
    return result.exit_code


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sluice-ops", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--json", action="store_true", help="print JSON instead of text")
        sp.set_defaults(func=func)
        return sp

    sp = add("configs", cmd_configs, "count or list gate-opening patterns")
    sp.add_argument("--bays", type=int, required=True, help="number of bays n")
    sp.add_argument("--open", type=int, help="number of open gates m; lists the patterns")
    sp.add_argument("--symmetric", action="store_true")

    sp = add("discharge", cmd_discharge, "discharge through one submerged gate")
    sp.add_argument("--h0", type=float, required=True, help="upstream depth over the sill (m)")
    sp.add_argument("--h4", type=float, required=True, help="downstream depth over the sill (m)")
    sp.add_argument("--opening", type=float, required=True, help="gate opening a (m)")
    sp.add_argument("--width", type=float, required=True, help="bay width w (m)")
    sp.add_argument("--losses", help="YAML with c_c_in, xi_out and optionally w_in, w_out")
    sp.add_argument("--w-in", type=float)
    sp.add_argument("--w-out", type=float)
    sp.add_argument("--c-c-in", type=float, default=0.9)
    sp.add_argument("--xi-out", type=float, default=1.0)

    sp = add("simulate", cmd_simulate, "run one operation scenario")
    sp.add_argument("--config", required=True,
                    help="YAML file, or the name of a built-in case (test_case)")
    sp.add_argument("--mode", choices=["constant_opening", "pid"])
    sp.add_argument("--m", type=int)
    sp.add_argument("--out", default="out")
    sp.add_argument("--no-plots", action="store_true")

    sp = add("analyze", cmd_analyze, "diagnostics of a time-mean flow field")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--field", help="CSV with columns x,z,u,w,k")
    src.add_argument("--synthetic", type=float, nargs=6,
                     metavar=("H1", "H3", "A", "C_C", "Q", "W"),
                     help="generate a synthetic submerged jet instead")
    sp.add_argument("--surface", help="CSV with columns x,eta")
    sp.add_argument("--gate-x", type=float)
    sp.add_argument("--opening", type=float, help="gate opening a, selects the response curve")
    sp.add_argument("--h2", type=float, help="depth at the vena contracta for Fr")
    sp.add_argument("--alpha", type=float, action="append",
                    help="turbulence weight, repeatable (default 3 and 6)")
    sp.add_argument("--delta", type=float, default=DELTA_QUARRY_STONE)
    sp.add_argument("--f-range", type=float, nargs=2, metavar=("F_LO", "F_HI"))
    sp.add_argument("--thickness", type=float, help="gate-bottom thickness L (m)")
    sp.add_argument("--stiffness", type=float)
    sp.add_argument("--mass", type=float)
    sp.add_argument("--added-stiffness", type=float, default=0.0)
    sp.add_argument("--added-mass", type=float, default=0.0)
    sp.add_argument("--curve", action="append",
                    help="response curve CSV, optionally PATH:A_MIN:A_MAX; repeatable")
    sp.add_argument("--out", default="out")
    sp.add_argument("--no-plots", action="store_true")

    sp = add("pipeline", cmd_pipeline, "simulate, analyse and rank all scenarios")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default="out")
    sp.add_argument("--no-plots", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ScenarioError, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
