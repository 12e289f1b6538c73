"""Submerged underflow discharge of a single gate bay.

Five stations along one bay (depths above the sill):

    h0  lake side, upstream of the piers
    h1  between the piers, upstream of the gate
    h2  control section under/just behind the gate
    h3  between the piers, behind the recirculation zone
    h4  sea side, beyond the piers

Energy is conserved over the accelerating transitions h0->h1 (entrance loss)
and h1->h2 (jet of thickness C_c*a), momentum over the decelerating
transition h2->h3, and h3->h4 carries the exit loss. For a trial discharge the
upstream pair is swept in the flow direction to give h2_forward, the
downstream pair against it to give h2_backward; the discharge is the one at
which both agree.

The momentum balance over h2->h3 is written per unit width,

    g*h2**2/2 + q**2/(C_c*a) = g*h3**2/2 + q**2/h3,    q = Q/w,

which is the dimensionally consistent reading of the printed relation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping

from scipy.optimize import brentq, minimize_scalar

from .errors import ConvergenceError, DomainError, NoSolutionError, ZeroHeadError

G = 9.81

DEFAULT_TOL = 1e-6
# a/h1 below this is a closed gate
CLOSED_RATIO = 1e-4
SCAN_POINTS = 32  # coarse scan for the first sign change of g(Q)


@dataclass(frozen=True)
class GateGeometry:
    """Bay geometry. ``w_in``/``w_out`` default to the bay width ``w``."""

    w: float
    a: float
    w_in: float | None = None
    w_out: float | None = None
    sill_level: float = 0.0

    def __post_init__(self):
        if self.w_in is None:
            object.__setattr__(self, "w_in", self.w)
        if self.w_out is None:
            object.__setattr__(self, "w_out", self.w)
        if not self.w > 0:
            raise DomainError(f"bay width must be positive, got {self.w}")
        if not self.a >= 0:
            raise DomainError(f"gate opening must be >= 0, got {self.a}")
        if self.w_in < self.w or self.w_out < self.w:
            raise DomainError("approach and exit widths must be >= the bay width")

    def with_opening(self, a: float) -> "GateGeometry":
        return replace(self, a=a)


@dataclass(frozen=True)
class LossCoefficients:
    c_c_in: float = 0.9
    xi_out: float = 1.0

    def __post_init__(self):
        if not 0 < self.c_c_in <= 1:
            raise DomainError(f"c_c_in must lie in (0, 1], got {self.c_c_in}")
        if not self.xi_out >= 0:
            raise DomainError(f"xi_out must be >= 0, got {self.xi_out}")

    @property
    def xi_in(self) -> float:
        return (1.0 / self.c_c_in - 1.0) ** 2


@dataclass(frozen=True)
class LossTable:
    """Loss coefficients as a function of the number of open gates."""

    by_m: Mapping[int, LossCoefficients] = field(default_factory=dict)
    default: LossCoefficients = LossCoefficients()

    def for_gates(self, m: int) -> LossCoefficients:
        return self.by_m.get(m, self.default)


@dataclass(frozen=True)
class StationLevels:
    h0: float
    h1: float
    h2: float
    h3: float
    h4: float


class Regime(str, enum.Enum):
    SUBMERGED = "submerged"
    MODULAR = "modular_limit_reached"


@dataclass(frozen=True)
class DischargeSolution:
    levels: StationLevels
    q_total: float
    c_c: float
    c_d: float
    regime: Regime
    residual: float
    q_mf: float | None = None

    @property
    def q_effective(self) -> float:
        """Discharge to book: the submerged result, capped at Q_MF when modular."""
        if self.regime is Regime.MODULAR and self.q_mf is not None:
            return min(self.q_total, self.q_mf)
        return self.q_total

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d


# ---------------------------------------------------------------------------
# empirical coefficients

def contraction_coefficient(ratio: float) -> float:
    """C_c of a sharp-edged gate as a function of a/h1.

    Henry fit above a/h1 = 0.5, Cozzo fit (natural log) at or below.
    """
    if not 0 < ratio <= 1:
        raise DomainError(f"a/h1 must lie in (0, 1], got {ratio}")
    if ratio > 0.5:
        return 0.782 / (1.782 - ratio)
    return -0.004 * math.log(ratio) + 0.6074


def discharge_coefficient(c_c: float, ratio: float) -> float:
    if not 0 < c_c <= 1:
        raise DomainError(f"c_c must lie in (0, 1], got {c_c}")
    if not 0 < ratio <= 1:
        raise DomainError(f"a/h1 must lie in (0, 1], got {ratio}")
    return c_c / math.sqrt(1.0 + c_c * ratio)


def simple_submerged_discharge(c_d: float, a: float, w: float,
                               h_up: float, h_down: float) -> float:
    """Q = C_D*a*w*sqrt(2g(h_up - h_down))."""
    if a == 0:
        return 0.0
    if c_d <= 0 or a < 0 or w <= 0:
        raise DomainError("c_d, a and w must be positive")
    if h_up <= h_down:
        raise ZeroHeadError(f"no positive head: h_up={h_up}, h_down={h_down}")
    return c_d * a * w * math.sqrt(2.0 * G * (h_up - h_down))


def nago_ce(c_d: float, h1: float, h3: float) -> float:
    """Discharge coefficient referred to the upstream depth, C_D*sqrt((h1-h3)/h1)."""
    if not h1 > h3 > 0:
        raise DomainError(f"need h1 > h3 > 0, got h1={h1}, h3={h3}")
    return c_d * math.sqrt(h1 - h3) / math.sqrt(h1)


# ---------------------------------------------------------------------------
# cubic root selection

def _polyval(coeffs, x):
    c3, c2, c1, c0 = coeffs
    return ((c3 * x + c2) * x + c1) * x + c0


def _real_cubic_roots(c3, c2, c1, c0):
    """Real roots of c3 x^3 + c2 x^2 + c1 x + c0 (c3 != 0), trigonometric/Cardano form."""
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if p == 0 and q == 0:
        return [shift]
    if disc > 0:
        s = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + s) ** (1 / 3), -q / 2.0 + s)
        v = math.copysign(abs(-q / 2.0 - s) ** (1 / 3), -q / 2.0 - s)
        return [u + v + shift]
    r = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * r) if p != 0 else 0.0
    phi = math.acos(max(-1.0, min(1.0, arg)))
    return [r * math.cos((phi - 2.0 * math.pi * k) / 3.0) + shift for k in range(3)]


def solve_cubic_subcritical(coeffs, bracket) -> float:
    """The single real root of a cubic inside ``bracket`` = (lo, hi].

    ``coeffs`` are highest degree first. The closed-form root is polished with
    Newton steps kept inside the bracket; bisection (brentq) takes over when the
    closed form does not land in the bracket, e.g. near a double root.
    """
    lo, hi = bracket
    if not hi > lo:
        raise DomainError(f"empty bracket ({lo}, {hi}]")
    f_lo, f_hi = _polyval(coeffs, lo), _polyval(coeffs, hi)
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        raise NoSolutionError(f"no real root in ({lo:.6g}, {hi:.6g}]")

    c3, c2, c1, _ = coeffs
    span = hi - lo
    inside = []
    if c3 != 0:
        inside = [r for r in _real_cubic_roots(*coeffs)
                  if lo - 1e-9 * span <= r <= hi + 1e-9 * span]
    if len(inside) == 1:
        x = min(max(inside[0], lo), hi)
        for _ in range(3):
            dfx = (3.0 * c3 * x + 2.0 * c2) * x + c1
            if dfx == 0:
                break
            x_new = x - _polyval(coeffs, x) / dfx
            if not lo <= x_new <= hi or x_new == x:
                break
            x = x_new
        return x
    return brentq(lambda x: _polyval(coeffs, x), lo, hi, xtol=1e-14)


def _energy_depth(energy: float, k: float) -> float:
    """Subcritical depth h solving h + k/h**2 = energy (k = velocity-head numerator).

    k > 0: root in (h_crit, energy]; k < 0 (exit loss larger than the recovered
    head): the residual is monotone and the root lies in [energy, energy - k/energy**2].
    """
    if k == 0:
        return energy
    coeffs = (1.0, -energy, 0.0, k)
    if k > 0:
        h_crit = (2.0 * k) ** (1.0 / 3.0)
        if energy <= 1.5 * h_crit:
            raise NoSolutionError(
                f"energy head {energy:.6g} m below the critical minimum {1.5 * h_crit:.6g} m")
        return solve_cubic_subcritical(coeffs, (h_crit, energy))
    return solve_cubic_subcritical(coeffs, (energy, energy - k / energy ** 2))


# ---------------------------------------------------------------------------
# the four transitions

def entrance_transition(h0: float, q: float, geom: GateGeometry,
                        losses: LossCoefficients) -> float:
    """h1 from h0 + U0^2/2g = h1 + (1 + xi_in) U1^2/2g."""
    if not h0 > 0:
        raise DomainError(f"h0 must be positive, got {h0}")
    e0 = h0 + (q / (geom.w_in * h0)) ** 2 / (2.0 * G)
    k = (1.0 + losses.xi_in) * (q / geom.w) ** 2 / (2.0 * G)
    return _energy_depth(e0, k)


def jet_thickness(h1: float, a: float) -> tuple[float, float]:
    """(C_c, C_c*a_eff) with the opening capped at h1 (gate clear of the water)."""
    a_eff = min(a, h1)
    c_c = contraction_coefficient(a_eff / h1)
    return c_c, c_c * a_eff


def gate_energy_transition(h1: float, q: float, w: float, jet: float) -> float:
    """h2 from h1 + U1^2/2g = h2 + U_jet^2/2g."""
    qw = q / w
    return h1 + qw * qw / (2.0 * G) * (1.0 / (h1 * h1) - 1.0 / (jet * jet))


def exit_transition(h4: float, q: float, geom: GateGeometry,
                    losses: LossCoefficients) -> float:
    """h3 from h3 - h4 = U4^2/2g + (xi_out - 1) U3^2/2g."""
    if not h4 > 0:
        raise DomainError(f"h4 must be positive, got {h4}")
    e4 = h4 + (q / (geom.w_out * h4)) ** 2 / (2.0 * G)
    k = (1.0 - losses.xi_out) * (q / geom.w) ** 2 / (2.0 * G)
    return _energy_depth(e4, k)


def jet_momentum_transition(h3: float, q: float, w: float, jet: float) -> float:
    """h2 from the momentum balance between the vena contracta and h3.

    Clipped at zero when the jet momentum exceeds what the downstream depth
    can hold (the jump is swept away from the gate).
    """
    qw = q / w
    rhs = 0.5 * G * h3 * h3 + qw * qw / h3 - qw * qw / jet
    return math.sqrt(max(rhs, 0.0) * 2.0 / G)


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class _Forward:
    h1: float
    h2: float
    c_c: float
    jet: float
    a_eff: float


def _forward(h0, q, geom, losses, c_c=None) -> _Forward:
    h1 = entrance_transition(h0, q, geom, losses)
    if c_c is None:
        c_c, jet = jet_thickness(h1, geom.a)
    else:
        jet = c_c * min(geom.a, h1)
    h2 = gate_energy_transition(h1, q, geom.w, jet)
    return _Forward(h1, h2, c_c, jet, min(geom.a, h1))


def forward_sweep(h0: float, q: float, geom: GateGeometry,
                  losses: LossCoefficients) -> float:
    """h2 computed in the flow direction, h0 -> h1 -> h2."""
    if q < 0:
        raise DomainError("discharge must be >= 0")
    if geom.a <= 0:
        raise DomainError("gate opening must be positive")
    return _forward(h0, q, geom, losses).h2


def backward_sweep(h4: float, q: float, geom: GateGeometry,
                   losses: LossCoefficients, c_c: float | None = None) -> float:
    """h2 computed against the flow, h4 -> h3 -> h2.

    The jet thickness needs C_c, which depends on h1; pass the value from the
    forward sweep. Without it C_c is evaluated at a/h3, adequate only for
    stand-alone use.
    """
    if q < 0:
        raise DomainError("discharge must be >= 0")
    if geom.a <= 0:
        raise DomainError("gate opening must be positive")
    h3 = exit_transition(h4, q, geom, losses)
    if c_c is None:
        c_c, jet = jet_thickness(h3, geom.a)
    else:
        jet = c_c * geom.a
    return jet_momentum_transition(h3, q, geom.w, jet)


# ---------------------------------------------------------------------------
# discharge iteration

def classify_regime(h2: float, contracted_depth: float) -> Regime:
    """Submerged while the control-section depth h2 stays above C_c*a."""
    return Regime.SUBMERGED if h2 > contracted_depth else Regime.MODULAR


def _choke_discharge(h0, geom, losses, q_hi):
    """Largest discharge for which the entrance transition still has a subcritical depth."""
    lo, hi = 0.0, q_hi
    for _ in range(60):
        try:
            entrance_transition(h0, hi, geom, losses)
            lo, hi = hi, 2.0 * hi
        except NoSolutionError:
            break
    else:
        # lossless entrance with no approach contraction never chokes
        return lo
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        try:
            entrance_transition(h0, mid, geom, losses)
            lo = mid
        except NoSolutionError:
            hi = mid
        if hi - lo <= 1e-12 * max(hi, 1.0):
            break
    return lo


def modular_discharge(h0: float, geom: GateGeometry, losses: LossCoefficients,
                      q_choke: float | None = None) -> float:
    """Q_MF: the discharge at which h2_forward falls to the vena-contracta depth.

    With the gate clear of the water there is no contraction and the entrance
    choke discharge is returned instead.
    """
    if q_choke is None:
        q_choke = _choke_discharge(h0, geom, losses, geom.a * geom.w * math.sqrt(2 * G * h0))

    def excess(q):
        try:
            f = _forward(h0, q, geom, losses)
        except NoSolutionError:
            return -h0
        return f.h2 - f.jet

    # the jet cannot carry more than its full-energy velocity allows
    ceiling = 2.0 * max(geom.a, h0) * geom.w * math.sqrt(2.0 * G * 2.0 * h0)
    q_top = min(q_choke, ceiling) * (1.0 - 1e-12)
    f_top = excess(q_top)
    if f_top >= 0 or excess(0.0) <= 0:
        return min(q_choke, ceiling)
    return brentq(excess, 0.0, q_top, xtol=1e-12 * q_top, maxiter=300)


def _fold_discharge(gap, scanned, step) -> float:
    """Q at the closest approach of the forward and backward h2 curves.

    ``scanned`` holds (Q, g(Q), backward depth exists) from the bracket scan.
    Only the stretch where the backward depth exists is searched.
    """
    live = [(q, g) for q, g, ok in scanned if ok]
    if not live:
        return math.inf
    q_best, _ = min(live, key=lambda qg: qg[1])
    lo, hi = max(q_best - step, 0.0), q_best + step
    res = minimize_scalar(gap, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * hi})
    return float(res.x) if res.fun <= gap(q_best) else q_best


def solve_discharge(h0: float, h4: float, geom: GateGeometry,
                    losses: LossCoefficients = LossCoefficients(),
                    tol: float = DEFAULT_TOL) -> DischargeSolution:
    """Discharge through one gate for boundary depths h0 (lake) and h4 (sea).

    Bisects (brentq) on g(Q) = h2_forward(Q) - h2_backward(Q) over
    (0, 1.5*Q_orifice], with Q_orifice = a*w*sqrt(2g(h0 - h4)), further capped at the
    entrance choke discharge.
    """
    if not h4 > 0:
        raise DomainError(f"h4 must be positive, got {h4}")
    if h0 <= h4:
        raise ZeroHeadError(f"no positive head: h0={h0}, h4={h4}")
    if geom.a < 0:
        raise DomainError("gate opening must be >= 0")

    if geom.a <= CLOSED_RATIO * h0:
        levels = StationLevels(h0, h0, h0, h4, h4)
        c_c = contraction_coefficient(CLOSED_RATIO)
        return DischargeSolution(levels, 0.0, c_c, discharge_coefficient(c_c, CLOSED_RATIO),
                                 Regime.SUBMERGED, 0.0)

    q_orifice = geom.a * geom.w * math.sqrt(2.0 * G * (h0 - h4))
    q_choke = _choke_discharge(h0, geom, losses, q_orifice)
    q_hi = min(1.5 * q_orifice, q_choke)

    frozen_cc = None

    def depths(q):
        """(h2 forward, h2 backward); -h0 / 0 flag a choked entrance / exit."""
        try:
            f = _forward(h0, q, geom, losses, frozen_cc)
        except NoSolutionError:
            return -h0, 0.0
        try:
            h3 = exit_transition(h4, q, geom, losses)
        except NoSolutionError:
            return f.h2, 0.0
        return f.h2, jet_momentum_transition(h3, q, geom.w, f.jet)

    def gap(q):
        h2f, h2b = depths(q)
        return h2f - h2b

    def state(q):
        f = _forward(h0, q, geom, losses, frozen_cc)
        try:
            h3 = exit_transition(h4, q, geom, losses)
            h2_back = jet_momentum_transition(h3, q, geom.w, f.jet)
        except NoSolutionError:
            # exit choked: report the critical depth there, no backward depth
            h3 = (max(1.0 - losses.xi_out, 0.0) * (q / geom.w) ** 2 / G) ** (1.0 / 3.0)
            h2_back = 0.0
        levels = StationLevels(h0, f.h1, 0.5 * (f.h2 + h2_back), h3, h4)
        c_d = discharge_coefficient(f.c_c, f.a_eff / f.h1)
        return f, levels, c_d, abs(f.h2 - h2_back)

    # g(Q) can change sign more than once: past the physical balance the
    # backward depth bottoms out at zero and the forward depth keeps falling.
    # The balance is the first sign change above Q = 0, found on a coarse scan.
    q_lo = 0.0
    scanned = []
    for k in range(1, SCAN_POINTS + 1):
        q_k = q_hi * k / SCAN_POINTS
        h2f, h2b = depths(q_k)
        if h2f - h2b <= 0:
            q_lo, q_hi = q_hi * (k - 1) / SCAN_POINTS, q_k
            break
        scanned.append((q_k, h2f - h2b, h2b > 0))
    else:
        q_mf = modular_discharge(h0, geom, losses, q_choke)
        if gap(q_mf) > 0:
            # no submerged balance at all; the bound is the largest discharge
            # the submerged branch carries before it folds, if that comes first
            q_mf = min(q_mf, _fold_discharge(gap, scanned, q_hi / SCAN_POINTS))
            f, levels, c_d, residual = state(q_mf)
            return DischargeSolution(levels, q_mf, f.c_c, c_d, Regime.MODULAR,
                                     residual, q_mf)
        q_hi = q_mf
    q = brentq(gap, q_lo, q_hi, xtol=1e-13 * q_hi, maxiter=300)

    try:
        f, levels, c_d, residual = state(q)
        regime = classify_regime(levels.h2, f.jet)
    except NoSolutionError:
        # the sign change sits on the entrance choke, not on a balance
        q = q_choke
        f, levels, c_d, residual = state(q)
        regime = Regime.MODULAR
    if regime is Regime.SUBMERGED and residual > tol and abs(f.a_eff / f.h1 - 0.5) < 1e-3:
        # root sits on the jump between the two C_c fits; settle it with C_c
        # held at the value found there
        frozen_cc = f.c_c
        q = brentq(gap, q_lo, q_hi, xtol=1e-13 * q_hi, maxiter=300)
        f, levels, c_d, residual = state(q)
        regime = classify_regime(levels.h2, f.jet)
    if regime is Regime.SUBMERGED:
        if residual > tol:
            raise ConvergenceError(
                f"h2 residual {residual:.3g} m exceeds tolerance {tol:.3g} m "
                f"(h0={h0}, h4={h4}, a={geom.a})", residual=residual)
        return DischargeSolution(levels, q, f.c_c, c_d, regime, residual)

    q_mf = modular_discharge(h0, geom, losses, q_choke)
    return DischargeSolution(levels, q, f.c_c, c_d, regime, residual, q_mf)
