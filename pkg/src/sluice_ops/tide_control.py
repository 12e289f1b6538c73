"""Lake-sea box model with two gate operation scenarios.

The lake is a single storage of area ``a_lake`` fed by a constant river
inflow. Gates are closed except while the lake stands above the sea; during
such a discharge event all ``m`` opened gates share one opening ``a(t)``,
either fixed for the whole event (``constant_opening``) or derived each step
from a PID-controlled discharge command (``pid``). The per-gate discharge
comes from :func:`sluice_ops.discharge.solve_discharge`.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .discharge import (
    G,
    GateGeometry,
    LossTable,
    Regime,
    solve_discharge,
)
from .errors import ConvergenceError, DomainError, InfeasibleOpeningError

log = logging.getLogger(__name__)

CLOSED = "closed"


@dataclass(frozen=True)
class Tide:
    mean_level: float
    amplitude: float
    period: float  # s

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError("tidal period must be positive")
        if self.amplitude < 0:
            raise DomainError("tidal amplitude must be >= 0")


@dataclass(frozen=True)
class SluiceSystem:
    a_lake: float
    q_river: float
    n: int
    w: float
    sill_level: float
    tide: Tide
    h_lake: float
    a_max: float = math.inf
    w_in: float | None = None
    w_out: float | None = None
    losses: LossTable = field(default_factory=LossTable)

    def __post_init__(self):
        if not self.a_lake > 0:
            raise DomainError("lake area must be positive")
        if self.n < 1:
            raise DomainError("bay count must be positive")
        if not self.a_max > 0:
            raise DomainError("gate travel a_max must be positive")

    def geometry(self, a: float) -> GateGeometry:
        return GateGeometry(self.w, a, self.w_in, self.w_out, self.sill_level)


class Mode(str, enum.Enum):
    CONSTANT = "constant_opening"
    PID = "pid"


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.5
    ki: float = 0.1
    kd: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(k) for k in (self.kp, self.ki, self.kd)):
            raise DomainError("PID gains must be finite")


@dataclass(frozen=True)
class ScenarioConfig:
    mode: Mode
    m: int
    h_target: float
    duration: float
    gains: PidGains = PidGains()
    ramp_duration: float = 1800.0
    dt: float = 60.0
    predicted_cd: float = 0.6
    target_tolerance: float = 0.02
    # add river inflow over the window to the required discharge
    plan_river_inflow: bool = True
    # predict C_D at event start from the discharge model instead of feeding
    # back the previous event's time average
    model_cd: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.m < 1:
            raise DomainError("at least one gate must be opened")
        if not self.dt > 0 or not self.duration > 0:
            raise DomainError("dt and duration must be positive")
        if self.ramp_duration < 0:
            raise DomainError("ramp duration must be >= 0")

    @property
    def label(self) -> str:
        return f"{self.mode.value}_m{self.m}"


@dataclass
class PidState:
    integral_sum: float = 0.0
    prev_error: float = 0.0
    q_set: float = 0.0

    def reset(self) -> None:
        self.integral_sum = 0.0
        self.prev_error = 0.0
        self.q_set = 0.0


@dataclass(frozen=True)
class StepRecord:
    t: float
    h_lake: float
    h_sea: float
    a: float
    q_total: float
    regime: str


@dataclass
class EventSummary:
    index: int
    t_start: float
    t_end: float
    n_open: int
    h_start: float
    h_min: float
    h_end: float
    v_tot: float
    v_tot_req: float
    q_req: float
    predicted_cd: float
    achieved_cd: float | None
    a_const: float | None
    modular_steps: int
    infeasible: bool
    target_met: bool

    @property
    def modular_fraction(self) -> float:
        return self.modular_steps / self.n_open if self.n_open else 0.0


@dataclass
class ScenarioTimeSeries:
    system: SluiceSystem
    scenario: ScenarioConfig
    records: list[StepRecord]
    events: list[EventSummary]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def v_tot(self) -> float:
        return sum(e.v_tot for e in self.events)

    @property
    def open_steps(self) -> int:
        return sum(e.n_open for e in self.events)

    @property
    def modular_fraction(self) -> float:
        n = self.open_steps
        return sum(e.modular_steps for e in self.events) / n if n else 0.0

    @property
    def target_met(self) -> bool:
        return bool(self.events) and all(e.target_met for e in self.events)

    @property
    def achieved_cd(self) -> float | None:
        for e in reversed(self.events):
            if e.achieved_cd is not None:
                return e.achieved_cd
        return None

    def max_head_record(self) -> StepRecord | None:
        """Open step with the largest lake-sea head difference."""
        open_recs = [r for r in self.records if r.regime != CLOSED]
        if not open_recs:
            return None
        return max(open_recs, key=lambda r: (r.h_lake - r.h_sea, -r.t))

    def summary(self) -> dict:
        return {
            "scenario": self.scenario.label,
            "mode": self.scenario.mode.value,
            "m": self.scenario.m,
            "V_tot": self.v_tot,
            "achieved_cd": self.achieved_cd,
            "target_met": self.target_met,
            "modular_fraction": self.modular_fraction,
            "infeasible_opening": any(e.infeasible for e in self.events),
            "events": [
                {
                    "index": e.index,
                    "t_start": e.t_start,
                    "t_end": e.t_end,
                    "V_tot": e.v_tot,
                    "V_tot_req": e.v_tot_req,
                    "Q_req": e.q_req,
                    "h_start": e.h_start,
                    "h_min": e.h_min,
                    "h_end": e.h_end,
                    "predicted_cd": e.predicted_cd,
                    "achieved_cd": e.achieved_cd,
                    "a_const": e.a_const,
                    "modular_fraction": e.modular_fraction,
                    "infeasible_opening": e.infeasible,
                    "target_met": e.target_met,
                }
                for e in self.events
            ],
        }


class ScenarioError(RuntimeError):
    """The discharge solver failed during a scenario run."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


# ---------------------------------------------------------------------------
# elementary operations

def sea_level(t: float, tide: Tide) -> float:
    return tide.mean_level + tide.amplitude * math.sin(2.0 * math.pi * t / tide.period)


def step_lake(h_lake: float, q_river: float, q_barrier: float,
              a_lake: float, dt: float) -> float:
    """One explicit Euler step of A_lake dh/dt = Q_river - Q_barrier."""
    if not a_lake > 0 or not dt > 0:
        raise DomainError("a_lake and dt must be positive")
    return h_lake + dt * (q_river - q_barrier) / a_lake


def required_discharge(a_lake: float, h_start: float, h_target: float,
                       t_start: float, t_end: float, q_river: float = 0.0) -> float:
    """Mean total discharge that lowers the lake from h_start to h_target over the window.

    ``q_river`` is added on top so the inflow during the window is passed as well;
    pass 0 for the bare storage term.
    """
    if not t_end > t_start:
        raise DomainError("discharge window must be non-empty")
    return a_lake * (h_start - h_target) / (t_end - t_start) + q_river


def plan_constant_opening(q_req: float, m: int, predicted_cd: float, w: float,
                          h_lake_mean: float, h_sea_mean: float,
                          a_max: float = math.inf) -> float:
    """a_const = Q_req / (m * C_D' * w * sqrt(2g(h_lake' - h_sea'))).

    Raises :class:`InfeasibleOpeningError` when the required opening exceeds
    ``a_max``; callers either add gates or clamp.
    """
    if q_req <= 0:
        return 0.0
    head = h_lake_mean - h_sea_mean
    if head <= 0:
        raise DomainError(f"predicted head must be positive, got {head}")
    a = q_req / (m * predicted_cd * w * math.sqrt(2.0 * G * head))
    if a > a_max:
        raise InfeasibleOpeningError(
            f"required opening {a:.3f} m exceeds gate travel {a_max:.3f} m",
            required=a, a_max=a_max)
    return a


def pid_step(state: PidState, q_prev: float, dt: float,
             gains: PidGains = PidGains(), q_max: float = math.inf) -> float:
    """Discharge command Q(t_i) = K_P e_i + K_I sum(e) + K_D (e_i - e_{i-1})/dt.

    e_i = Q_set - Q(t_{i-1}). The output is clamped to [0, q_max]; while clamped
    the integral is not advanced (anti-windup).
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    e = state.q_set - q_prev
    integral = state.integral_sum + e
    out = gains.kp * e + gains.ki * integral + gains.kd * (e - state.prev_error) / dt
    state.prev_error = e
    if out > q_max:
        return q_max
    if out < 0.0:
        return 0.0
    state.integral_sum = integral
    return out


def ramp_setpoint(q_set_final: float, t_since_open: float, ramp_duration: float) -> float:
    if ramp_duration <= 0 or t_since_open >= ramp_duration:
        return q_set_final
    return q_set_final * max(t_since_open, 0.0) / ramp_duration


def opening_from_discharge(q_command: float, m: int, predicted_cd: float, w: float,
                           h_lake: float, h_sea: float,
                           a_max: float = math.inf) -> float:
    head = h_lake - h_sea
    if q_command <= 0 or head <= 0:
        return 0.0
    a = q_command / (m * predicted_cd * w * math.sqrt(2.0 * G * head))
    return min(a, a_max)


def instantaneous_cd(q_gate: float, a: float, w: float, head: float) -> float:
    return q_gate / (a * w * math.sqrt(2.0 * G * head))


def update_predicted_cd(records) -> float | None:
    """Mean of Q_gate/(a w sqrt(2g head)) over the open steps of one event.

    ``records`` yields (q_gate, a, w, head) tuples; returns None when no step
    had the gate open under positive head.
    """
    values = [instantaneous_cd(q, a, w, head)
              for q, a, w, head in records if a > 0 and head > 0]
    if not values:
        return None
    return sum(values) / len(values)


def predict_window_end(t_start: float, tide: Tide, level: float) -> float:
    """First time after ``t_start`` at which the rising sea reaches ``level``."""
    if tide.amplitude == 0 or level >= tide.mean_level + tide.amplitude:
        return t_start + tide.period
    s = (level - tide.mean_level) / tide.amplitude
    if s <= -1.0:
        return t_start + 0.5 * tide.period
    # rising crossings sit at phase asin(s) (mod 2*pi)
    t_cross = math.asin(s) / (2.0 * math.pi) * tide.period
    k = math.floor((t_start - t_cross) / tide.period) + 1
    return t_cross + k * tide.period


def mean_sea_level(t0: float, t1: float, tide: Tide) -> float:
    """Time average of the tidal sine over [t0, t1]."""
    if not t1 > t0:
        return sea_level(t0, tide)
    k = 2.0 * math.pi / tide.period
    return tide.mean_level + tide.amplitude * (math.cos(k * t0) - math.cos(k * t1)) / (k * (t1 - t0))


# ---------------------------------------------------------------------------
# scenario loop

@dataclass
class _Event:
    index: int
    t_start: float
    h_start: float
    q_req: float
    v_req: float
    predicted_cd: float
    a_const: float | None = None
    infeasible: bool = False
    n_open: int = 0
    v_tot: float = 0.0
    h_min: float = math.inf
    modular_steps: int = 0
    cd_samples: list = field(default_factory=list)


def run_scenario(system: SluiceSystem, scenario: ScenarioConfig) -> ScenarioTimeSeries:
    """Step the box model over ``scenario.duration`` and operate the gates.

    Per step: sea level from the tide; gates open iff the lake stands above
    the sea (and both depths over the sill are positive); per-gate discharge
    from the discharge model with h0 = h_lake - sill, h4 = h_sea - sill; total
    discharge m*Q_gate; explicit Euler update of the lake. A modular step
    books the capped discharge Q_MF and is flagged.
    """
    if scenario.m > system.n:
        raise DomainError(f"cannot open {scenario.m} of {system.n} gates")
    losses = system.losses.for_gates(scenario.m)
    dt = scenario.dt
    n_steps = int(round(scenario.duration / dt))
    m, w = scenario.m, system.w

    h_lake = system.h_lake
    predicted_cd = scenario.predicted_cd
    cd_factor = 1.0
    pid = PidState()
    q_prev = 0.0
    event: _Event | None = None
    events: list[EventSummary] = []
    records: list[StepRecord] = []

    def close_event(ev: _Event, t_end: float, h_end: float) -> EventSummary:
        nonlocal predicted_cd, cd_factor
        achieved = update_predicted_cd(ev.cd_samples)
        if achieved is not None:
            predicted_cd = achieved
        if ev.v_req > 0 and ev.v_tot > 0:
            # the C_D that would have made the planned volume exact, relative to
            # the one used; carried into the next event's prediction
            cd_factor = min(max(cd_factor * ev.v_tot / ev.v_req, 0.5), 2.0)
        target_met = abs(ev.h_min - scenario.h_target) <= scenario.target_tolerance
        return EventSummary(
            index=ev.index, t_start=ev.t_start, t_end=t_end, n_open=ev.n_open,
            h_start=ev.h_start, h_min=ev.h_min, h_end=h_end, v_tot=ev.v_tot,
            v_tot_req=ev.v_req, q_req=ev.q_req, predicted_cd=ev.predicted_cd,
            achieved_cd=achieved, a_const=ev.a_const, modular_steps=ev.modular_steps,
            infeasible=ev.infeasible, target_met=target_met)

    for i in range(n_steps + 1):
        t = i * dt
        h_sea = sea_level(t, system.tide)
        h0 = h_lake - system.sill_level
        h4 = h_sea - system.sill_level
        is_open = h_lake > h_sea and h0 > 0 and h4 > 0 and i < n_steps

        if not is_open:
            if event is not None:
                events.append(close_event(event, t, h_lake))
                event = None
            q_prev = 0.0
            records.append(StepRecord(t, h_lake, h_sea, 0.0, 0.0, CLOSED))
            h_lake = step_lake(h_lake, system.q_river, 0.0, system.a_lake, dt)
            continue

        if event is None:
            event = _start_event(len(events), t, h_lake, system, scenario,
                                 predicted_cd, cd_factor)
            pid.reset()
            q_prev = 0.0

        if scenario.mode is Mode.CONSTANT:
            a = event.a_const
        else:
            pid.q_set = ramp_setpoint(event.q_req, t - event.t_start, scenario.ramp_duration)
            q_max = m * event.predicted_cd * w * system.a_max * math.sqrt(2.0 * G * (h_lake - h_sea))
            q_cmd = pid_step(pid, q_prev, dt, scenario.gains, q_max)
            a = opening_from_discharge(q_cmd, m, event.predicted_cd, w, h_lake, h_sea,
                                       system.a_max)

        if a > 0:
            try:
                sol = solve_discharge(h0, h4, system.geometry(a), losses)
            except ConvergenceError as exc:
                raise ScenarioError(
                    f"{scenario.label}: discharge solver failed at t={t:.0f} s "
                    f"(h_lake={h_lake:.4f}, h_sea={h_sea:.4f}, a={a:.4f}): {exc}", t=t) from exc
            q_gate = sol.q_effective
            regime = sol.regime.value
        else:
            q_gate, regime = 0.0, Regime.SUBMERGED.value
        q_total = m * q_gate

        event.n_open += 1
        event.v_tot += q_total * dt
        event.h_min = min(event.h_min, h_lake)
        event.cd_samples.append((q_gate, a, w, h_lake - h_sea))
        if regime == Regime.MODULAR.value:
            event.modular_steps += 1

        records.append(StepRecord(t, h_lake, h_sea, a, q_total, regime))
        q_prev = q_total
        h_lake = step_lake(h_lake, system.q_river, q_total, system.a_lake, dt)

    if event is not None:
        events.append(close_event(event, n_steps * dt, h_lake))
    return ScenarioTimeSeries(system, scenario, records, events)


def _start_event(index, t, h_lake, system, scenario, predicted_cd, cd_factor=1.0) -> _Event:
    tide = system.tide
    t_end = predict_window_end(t, tide, scenario.h_target)
    q_river = system.q_river if scenario.plan_river_inflow else 0.0
    q_req = max(required_discharge(system.a_lake, h_lake, scenario.h_target, t, t_end, q_river), 0.0)
    v_req = q_req * (t_end - t)
    ev = _Event(index, t, h_lake, q_req, v_req, predicted_cd)
    h_lake_mean = 0.5 * (h_lake + scenario.h_target)
    h_sea_mean = mean_sea_level(t, t_end, tide)
    if scenario.model_cd and h_lake_mean > h_sea_mean:
        _, cd = model_planned_opening(system, scenario.m, q_req, h_lake_mean,
                                      h_sea_mean, predicted_cd, cd_factor)
        ev.predicted_cd = predicted_cd = cd * cd_factor
    if scenario.mode is Mode.CONSTANT:
        try:
            ev.a_const = plan_constant_opening(q_req, scenario.m, predicted_cd, system.w,
                                               h_lake_mean, h_sea_mean, system.a_max)
        except (InfeasibleOpeningError, DomainError) as exc:
            log.info("%s event %d: %s; clamped", scenario.label, index, exc)
            ev.a_const = system.a_max
            ev.infeasible = True
    return ev


def model_cd(system: SluiceSystem, m: int, a: float, h_lake: float, h_sea: float) -> float | None:
    """C_D = Q_gate / (a w sqrt(2g head)) from the discharge model at fixed levels."""
    head = h_lake - h_sea
    h0, h4 = h_lake - system.sill_level, h_sea - system.sill_level
    if not (a > 0 and head > 0 and h4 > 0):
        return None
    try:
        sol = solve_discharge(h0, h4, system.geometry(a), system.losses.for_gates(m))
    except (ConvergenceError, DomainError):
        return None
    return instantaneous_cd(sol.q_effective, a, system.w, head)


def model_planned_opening(system: SluiceSystem, m: int, q_req: float, h_lake: float,
                          h_sea: float, cd_start: float, factor: float = 1.0,
                          iterations: int = 30):
    """Fixed-point iteration a = Q_req / (m f C_D(a) w sqrt(2g head)) on the discharge model.

    ``f`` scales the model C_D (feedback from earlier events). Returns (a, C_D)
    with the unscaled model C_D at that opening; the opening is clamped to the
    gate travel.
    """
    unit = factor * m * system.w * math.sqrt(2.0 * G * (h_lake - h_sea))
    cd = cd_start
    a = min(q_req / (unit * cd), system.a_max)
    for _ in range(iterations):
        new_cd = model_cd(system, m, a, h_lake, h_sea)
        if new_cd is None:
            break
        cd = new_cd
        a_new = min(q_req / (unit * cd), system.a_max)
        # damped: C_D rises with a, so plain substitution can overshoot
        a_new = 0.5 * (a + a_new)
        if abs(a_new - a) < 1e-4 * max(a, 1e-3):
            a = a_new
            break
        a = a_new
    return a, cd
