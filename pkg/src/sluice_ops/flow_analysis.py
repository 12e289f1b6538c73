"""Flow-impact diagnostics from a time-mean 2DV field near a gate.

Contraction and vena-contracta velocity come from the separation line between
the forward jet and the recirculating roller above it. Vibration
susceptibility is judged by the reduced velocity and a response-curve lookup,
bed loading by a depth-averaged Shields-type parameter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discharge import G
from .errors import DomainError, ParseError
from .flowfield import FlowField

DELTA_QUARRY_STONE = 1.65  # (rho_s - rho_w)/rho_w for 2650 / 1000 kg/m3
DEFAULT_ALPHAS = (3.0, 6.0)
VC_WINDOW = 5.0  # vena contracta searched within this many tailwater depths


class NoContractionError(DomainError):
    """No recirculation downstream of the gate, so no contracted jet to measure."""


# ---------------------------------------------------------------------------
# column integration

def _column_profile(field: FlowField, i: int, values: np.ndarray):
    """Wet part of column i as (z, v), extended to the surface at constant value."""
    wet = field.wet[i]
    z = field.z[wet]
    v = values[i, wet]
    top = field.surface[i]
    if z.size and top > z[-1] + 1e-12:
        z = np.append(z, top)
        v = np.append(v, v[-1])
    return z, v


def _integrate_to(z: np.ndarray, v: np.ndarray, z_top: float) -> float:
    """Trapezoidal integral of v(z) from z[0] to z_top, interpolating at z_top."""
    if z_top <= z[0]:
        return 0.0
    n = np.searchsorted(z, z_top, side="right")
    zz = np.append(z[:n], z_top) if z[n - 1] < z_top else z[:n]
    vv = np.append(v[:n], np.interp(z_top, z, v)) if z[n - 1] < z_top else v[:n]
    return float(np.sum(0.5 * (vv[1:] + vv[:-1]) * np.diff(zz)))


def column_flux(field: FlowField, x: float) -> float:
    """Depth integral of u in the column nearest to x (per unit width)."""
    i = field.column_index(x)
    z, u = _column_profile(field, i, field.u)
    return _integrate_to(z, u, field.surface[i])


# ---------------------------------------------------------------------------
# contraction and vena contracta

@dataclass(frozen=True)
class SeparationResult:
    x: np.ndarray        # columns searched
    z_edge: np.ndarray   # dividing line between forward and reverse flow
    x_vc: float
    thickness: float     # contracted jet height at x_vc
    contracted: bool


def separation_edge(field: FlowField, window: float | None = None) -> SeparationResult:
    """Dividing line z_edge(x) downstream of the gate and the vena contracta.

    In each column z_edge is the top of the layer, contiguous from the bed, in
    which u > 0; the sign change is located by linear interpolation between
    nodes. Columns without reverse flow get the full depth. The vena contracta
    is the thinnest jet within (gate_x, gate_x + window], window defaulting to
    five tailwater depths.
    """
    if window is None:
        window = VC_WINDOW * field.downstream_depth()
    sel = np.nonzero((field.x > field.gate_x) & (field.x <= field.gate_x + window))[0]
    if sel.size == 0:
        raise DomainError("no grid columns downstream of the gate")
    edges = np.empty(sel.size)
    reverse = np.zeros(sel.size, dtype=bool)
    for n, i in enumerate(sel):
        z, u = _column_profile(field, i, field.u)
        edge = field.surface[i]
        for j in range(z.size):
            if u[j] <= 0:
                if j == 0:
                    edge = z[0]
                else:
                    edge = z[j - 1] + (z[j] - z[j - 1]) * u[j - 1] / (u[j - 1] - u[j])
                reverse[n] = True
                break
        edges[n] = edge
    thick = edges - field.bed
    xs = field.x[sel]
    if not reverse.any():
        return SeparationResult(xs, edges, float(xs[0]), float(thick[0]), False)
    cand = np.where(reverse, thick, np.inf)
    n_vc = int(np.argmin(cand))
    return SeparationResult(xs, edges, float(xs[n_vc]), float(thick[n_vc]), True)


def contraction_from_field(field: FlowField, sep: SeparationResult | None = None) -> float:
    if not field.a > 0:
        raise DomainError("gate opening must be positive")
    if sep is None:
        sep = separation_edge(field)
    if not sep.contracted:
        raise NoContractionError("no reverse flow downstream of the gate")
    return min(sep.thickness / field.a, 1.0)


def vena_velocity(field: FlowField, c_c: float, x_vc: float | None = None) -> float:
    """U_vc = (1/(C_c a)) * integral of sqrt(u^2 + w^2) over [0, C_c a] at x_vc."""
    if not field.a > 0 or not c_c > 0:
        raise DomainError("gate opening and C_c must be positive")
    if x_vc is None:
        x_vc = separation_edge(field).x_vc
    i = field.column_index(x_vc)
    span = c_c * field.a
    if field.bed + span > field.surface[i] + 1e-9:
        raise DomainError(f"jet height {span:.3f} m exceeds the water column")
    z, speed = _column_profile(field, i, field.speed)
    return _integrate_to(z, speed, field.bed + span) / span


def froude(u_vc: float, h2: float) -> float:
    if not h2 > 0:
        raise DomainError("control-section depth must be positive")
    return u_vc / math.sqrt(G * h2)


def reduced_velocity(u_vc: float, f_gate: float, length: float) -> float:
    if not f_gate > 0 or not length > 0:
        raise DomainError("gate frequency and length scale must be positive")
    return u_vc / (f_gate * length)


def vr_band(u_vc: float, f_range: tuple[float, float], length: float) -> tuple[float, float]:
    """Reduced-velocity range for a band of response frequencies."""
    f_lo, f_hi = sorted(f_range)
    return reduced_velocity(u_vc, f_hi, length), reduced_velocity(u_vc, f_lo, length)


# ---------------------------------------------------------------------------
# vibration response

@dataclass(frozen=True)
class ResponseCurve:
    label: str
    vr: tuple[float, ...]
    relative_amplitude: tuple[float, ...]
    # openings this curve applies to, [lo, hi)
    a_range: tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        vr = tuple(float(v) for v in self.vr)
        amp = tuple(float(v) for v in self.relative_amplitude)
        if not vr or len(vr) != len(amp):
            raise DomainError("response curve needs matching, non-empty samples")
        if any(b <= a for a, b in zip(vr, vr[1:])):
            raise DomainError("Vr samples must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for v in amp):
            raise DomainError("relative amplitude must lie in [0, 1]")
        object.__setattr__(self, "vr", vr)
        object.__setattr__(self, "relative_amplitude", amp)

    @classmethod
    def from_csv(cls, path, label: str | None = None,
                 a_range: tuple[float, float] = (0.0, math.inf)) -> "ResponseCurve":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["vr", "relative_amplitude"]:
            raise ParseError("expected header vr,relative_amplitude", line=1)
        vr, amp = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                vr.append(float(row[0]))
                amp.append(float(row[1]))
            except (ValueError, IndexError):
                raise ParseError(f"bad row {row!r}", line=lineno) from None
        try:
            return cls(label or Path(path).stem, vr, amp, a_range)
        except DomainError as exc:
            raise ParseError(str(exc)) from exc


def amplitude_lookup(curve: ResponseCurve, vr: float) -> float:
    """A/A_max by linear interpolation; 0 outside the sampled Vr range."""
    return float(np.interp(vr, curve.vr, curve.relative_amplitude, left=0.0, right=0.0))


def curve_for_opening(curves, a: float) -> ResponseCurve:
    """Curve whose opening range holds ``a``; a lone curve serves any opening."""
    curves = list(curves)
    if len(curves) == 1 and (math.isnan(a) or curves[0].a_range == (0.0, math.inf)):
        return curves[0]
    for c in curves:
        if c.a_range[0] <= a < c.a_range[1]:
            return c
    raise DomainError(f"no response curve covers opening a={a}")


@dataclass(frozen=True)
class GateDynamics:
    k_struct: float
    m_struct: float
    length: float          # gate-bottom thickness L (m)
    k_w: float = 0.0
    m_w: float = 0.0
    f_gate: float | None = None  # measured response frequency, overrides the estimate

    def __post_init__(self):
        if min(self.k_struct, self.k_w, self.m_w) < 0:
            raise DomainError("stiffness and added mass must be >= 0")
        if not self.m_struct > 0:
            raise DomainError("structural mass must be positive")
        if not self.length > 0:
            raise DomainError("gate-bottom thickness must be positive")
        if self.f_gate is not None and not self.f_gate > 0:
            raise DomainError("measured frequency must be positive")

    def response_frequency(self) -> float:
        return self.f_gate if self.f_gate is not None else natural_frequency(self)


def natural_frequency(dyn) -> float:
    """Undamped f = sqrt((k + k_w)/(m + m_w)) / 2pi of a partly submerged gate."""
    mass = dyn.m_struct + dyn.m_w
    if not mass > 0:
        raise DomainError("total vibrating mass must be positive")
    return math.sqrt((dyn.k_struct + dyn.k_w) / mass) / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# bed stability

@dataclass(frozen=True)
class StabilityProfile:
    x: np.ndarray
    psi: np.ndarray
    alpha: float
    delta: float
    skipped: tuple[float, ...] = field(default=())  # dry columns

    @property
    def max_psi(self) -> float:
        return float(np.max(self.psi)) if self.psi.size else 0.0

    @property
    def x_max(self) -> float | None:
        return float(self.x[int(np.argmax(self.psi))]) if self.psi.size else None


def psi_profile(field: FlowField, alpha: float, delta: float = DELTA_QUARRY_STONE,
                window: tuple[float, float] | None = None) -> StabilityProfile:
    """Psi(x) = <(U + alpha sqrt(k))^2> / (delta g d), averaged over the whole depth.

    U is the time-mean speed sqrt(u^2 + w^2). Columns in ``window`` (default:
    everything downstream of the gate) with zero depth are skipped.
    """
    if alpha < 0:
        raise DomainError("alpha must be >= 0")
    if not delta > 0:
        raise DomainError("relative density delta must be positive")
    lo, hi = window if window is not None else (field.gate_x, math.inf)
    load = (field.speed + alpha * np.sqrt(np.where(np.isnan(field.k), 0.0, field.k))) ** 2
    xs, psi, skipped = [], [], []
    for i, xi in enumerate(field.x):
        if not lo < xi <= hi:
            continue
        d = field.surface[i] - field.bed
        if not d > 0:
            skipped.append(float(xi))
            continue
        z, v = _column_profile(field, i, load)
        mean = _integrate_to(z, v, field.surface[i]) / d
        xs.append(xi)
        psi.append(mean / (delta * G * d))
    return StabilityProfile(np.array(xs), np.array(psi), alpha, delta, tuple(skipped))


def save_psi_profiles(profiles, path) -> None:
    """One row per column: x, then Psi for each profile (same columns assumed)."""
    profiles = list(profiles)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x"] + [f"psi_alpha_{p.alpha:g}" for p in profiles])
        for n, xv in enumerate(profiles[0].x):
            wr.writerow([repr(float(xv))] + [repr(float(p.psi[n])) for p in profiles])


# ---------------------------------------------------------------------------
# one-shot summary

@dataclass
class FieldAnalysis:
    c_c: float | None
    x_vc: float | None
    u_vc: float | None
    froude: float | None
    h2: float | None
    vr_range: tuple[float, float] | None
    relative_amplitude: tuple[float, float] | None
    psi: list[StabilityProfile]
    notes: list[str]

    def to_dict(self) -> dict:
        return {
            "C_c": self.c_c,
            "x_vc": self.x_vc,
            "U_vc": self.u_vc,
            "h2": self.h2,
            "Fr": self.froude,
            "Vr_range": list(self.vr_range) if self.vr_range else None,
            "relative_amplitude": (list(self.relative_amplitude)
                                   if self.relative_amplitude else None),
            "psi_max": {f"{p.alpha:g}": p.max_psi for p in self.psi},
            "notes": list(self.notes),
        }


def analyze_field(field: FlowField, alphas=DEFAULT_ALPHAS, delta: float = DELTA_QUARRY_STONE,
                  h2: float | None = None, f_range: tuple[float, float] | None = None,
                  length: float | None = None, curves=()) -> FieldAnalysis:
    """Run every diagnostic that the inputs allow.

    h2 defaults to the surface depth at the vena contracta. The Vr band needs
    both ``f_range`` and the gate-bottom thickness ``length``; there is no
    default length.
    """
    notes: list[str] = []
    c_c = x_vc = u_vc = fr = None
    try:
        sep = separation_edge(field)
        c_c = contraction_from_field(field, sep)
        x_vc = sep.x_vc
        u_vc = vena_velocity(field, c_c, x_vc)
        if h2 is None:
            h2 = float(field.surface[field.column_index(x_vc)] - field.bed)
        fr = froude(u_vc, h2)
    except NoContractionError as exc:
        notes.append(str(exc))
    vr = amp = None
    if u_vc is not None and f_range is not None and length is not None:
        vr = vr_band(u_vc, f_range, length)
        if curves:
            curve = curve_for_opening(curves, field.a)
            grid = np.linspace(vr[0], vr[1], 51)
            values = [amplitude_lookup(curve, v) for v in grid]
            amp = (min(values), max(values))
    elif f_range is not None:
        notes.append("gate-bottom thickness not given; reduced velocity skipped")
    profiles = [psi_profile(field, a_, delta) for a_ in alphas]
    for p in profiles:
        if p.skipped:
            notes.append(f"alpha={p.alpha:g}: {len(p.skipped)} dry columns skipped")
            break
    return FieldAnalysis(c_c, x_vc, u_vc, fr, h2, vr, amp, profiles, notes)
