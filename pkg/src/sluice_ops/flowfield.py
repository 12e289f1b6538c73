"""Two-dimensional vertical (x-z) flow fields on a rectangular grid.

A field is stored node-wise: ``u``, ``w`` and ``k`` have shape (nx, nz), with
x the streamwise coordinate and z the elevation; the bed is the lowest grid
line. Nodes above the free surface are dry and ignored by the analysis.

File format (CSV, SI units)::

    # gate_x=0.0
    # a=1.3
    x,z,u,w,k
    -1.0,0.0,1.2,0.0,0.001
    ...

one node per row, ordered by x then z. Optional ``# key=value`` lines before
the header carry the gate position and opening. The free surface comes in a
companion file with header ``x,eta``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError

FIELD_HEADER = ["x", "z", "u", "w", "k"]
SURFACE_HEADER = ["x", "eta"]
META_KEYS = ("gate_x", "a")
WET_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FlowField:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    w: np.ndarray
    k: np.ndarray
    surface: np.ndarray
    gate_x: float = 0.0
    a: float = math.nan

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        for name, c in (("x", x), ("z", z)):
            if c.ndim != 1 or c.size < 2:
                raise DomainError(f"{name} needs at least two grid lines")
            if not np.all(np.diff(c) > 0):
                raise DomainError(f"{name} coordinates must be strictly increasing")
        shape = (x.size, z.size)
        arrays = {}
        for name in ("u", "w", "k"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != shape:
                raise DomainError(f"{name} has shape {v.shape}, grid is {shape}")
            arrays[name] = v
        eta = np.asarray(self.surface, dtype=float)
        if eta.shape != (x.size,):
            raise DomainError("surface needs one elevation per x column")
        if np.any(eta < z[0] - WET_TOL) or np.any(eta > z[-1] + WET_TOL):
            raise DomainError("surface elevation outside the grid's z range")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "surface", eta)
        for name, v in arrays.items():
            object.__setattr__(self, name, v)

        wet = self.wet
        for name, v in arrays.items():
            if not np.all(np.isfinite(v[wet])):
                raise DomainError(f"{name} must be finite below the surface")
        if np.any(arrays["k"][wet] < 0):
            raise DomainError("turbulent kinetic energy must be >= 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.size, self.z.size

    @property
    def bed(self) -> float:
        return float(self.z[0])

    @property
    def wet(self) -> np.ndarray:
        """Boolean (nx, nz) mask of nodes at or below the free surface."""
        return self.z[None, :] <= self.surface[:, None] + WET_TOL

    @property
    def depth(self) -> np.ndarray:
        return self.surface - self.bed

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.u, self.w)

    def column_index(self, x: float) -> int:
        return int(np.argmin(np.abs(self.x - x)))

    def downstream_depth(self) -> float:
        """Depth in the last column, taken as the tailwater depth h3."""
        return float(self.depth[-1])


# ---------------------------------------------------------------------------
# file I/O

def _fmt(v: float) -> str:
    return repr(float(v))


def _parse_float(text: str, line: int, name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{name} is not a number: {text!r}", line=line) from None


def _read_rows(path: Path, header: list[str]):
    """Yield (line number, row) after the header; return metadata dict first."""
    meta: dict[str, float] = {}
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if "=" in body:
            key, _, val = body.partition("=")
            key = key.strip()
            if key in META_KEYS:
                meta[key] = _parse_float(val.strip(), i + 1, key)
        i += 1
    if i >= len(lines):
        raise ParseError("missing header", line=i + 1)
    found = [c.strip() for c in lines[i].split(",")]
    if found != header:
        raise ParseError(f"expected header {','.join(header)}, got {lines[i]!r}", line=i + 1)
    rows = []
    for lineno, row in enumerate(csv.reader(lines[i + 1:]), start=i + 2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        rows.append((lineno, [_parse_float(v, lineno, h) for v, h in zip(row, header)]))
    return meta, rows


def _grid_from_rows(rows):
    xs, zs = [], []
    for _, (x, z, *_rest) in rows:
        if not xs or x != xs[-1]:
            xs.append(x)
        if len(xs) == 1:
            zs.append(z)
    nx, nz = len(xs), len(zs)
    if nx < 2 or nz < 2:
        raise ParseError("grid needs at least 2 x and 2 z lines",
                         line=rows[-1][0] if rows else None)
    if len(rows) != nx * nz:
        raise ParseError(f"{len(rows)} nodes for a {nx} x {nz} grid",
                         line=rows[-1][0])
    for r, (lineno, (x, z, *_rest)) in enumerate(rows):
        i, j = divmod(r, nz)
        if x != xs[i] or z != zs[j]:
            raise ParseError(f"node ({x}, {z}) out of order, expected "
                             f"({xs[i]}, {zs[j]})", line=lineno)
    for c, name in ((xs, "x"), (zs, "z")):
        for p in range(1, len(c)):
            if not c[p] > c[p - 1]:
                # first row carrying the offending coordinate
                bad = p * nz if name == "x" else p
                raise ParseError(f"{name} coordinates not strictly increasing",
                                 line=rows[bad][0])
    return np.array(xs), np.array(zs)


def load_surface(path, x: np.ndarray | None = None) -> np.ndarray:
    _, rows = _read_rows(Path(path), SURFACE_HEADER)
    if not rows:
        raise ParseError("surface file has no rows")
    xs = np.array([r[1][0] for r in rows])
    eta = np.array([r[1][1] for r in rows])
    if x is not None:
        if xs.shape != x.shape or not np.array_equal(xs, x):
            raise ParseError("surface x values do not match the field's columns",
                             line=rows[0][0])
    return eta


def load_flow_field(path, surface_path=None, gate_x: float | None = None,
                    a: float | None = None) -> FlowField:
    """Read a field CSV (and its surface file).

    Without a surface file the surface is placed at the highest node with
    finite values in each column. ``gate_x`` and ``a`` override the values in
    the file's comment lines.
    """
    meta, rows = _read_rows(Path(path), FIELD_HEADER)
    if not rows:
        raise ParseError("field file has no nodes")
    for lineno, (_, _, u, w, k) in rows:
        if k < 0:
            raise ParseError(f"negative turbulent kinetic energy k={k}", line=lineno)
    x, z = _grid_from_rows(rows)
    data = np.array([r[1] for r in rows]).reshape(x.size, z.size, 5)
    u, w, k = data[..., 2], data[..., 3], data[..., 4]
    if surface_path is not None:
        eta = load_surface(surface_path, x)
    else:
        finite = np.isfinite(u) & np.isfinite(w) & np.isfinite(k)
        top = np.array([np.max(np.nonzero(col)[0]) if col.any() else 0 for col in finite])
        eta = z[top]
    try:
        return FlowField(
            x, z, u, w, k, eta,
            gate_x=meta.get("gate_x", 0.0) if gate_x is None else gate_x,
            a=meta.get("a", math.nan) if a is None else a)
    except DomainError as exc:
        raise ParseError(str(exc)) from exc


def save_flow_field(field: FlowField, path, surface_path=None) -> None:
    """Write the canonical form read by :func:`load_flow_field`."""
    out = [f"# gate_x={_fmt(field.gate_x)}"]
    if not math.isnan(field.a):
        out.append(f"# a={_fmt(field.a)}")
    out.append(",".join(FIELD_HEADER))
    for i, xv in enumerate(field.x):
        for j, zv in enumerate(field.z):
            out.append(",".join(_fmt(v) for v in (xv, zv, field.u[i, j],
                                                  field.w[i, j], field.k[i, j])))
    Path(path).write_text("\n".join(out) + "\n")
    if surface_path is not None:
        lines = [",".join(SURFACE_HEADER)]
        lines += [f"{_fmt(xv)},{_fmt(e)}" for xv, e in zip(field.x, field.surface)]
        Path(surface_path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# synthetic submerged jet

@dataclass(frozen=True)
class GridSpec:
    nx: int = 161
    nz: int = 81
    upstream: float = 2.0    # domain length upstream of the gate, in units of h1
    downstream: float = 8.0  # domain length downstream of the gate, in units of h3
    jet_exponent: float = 6.0
    backflow: float = 0.4    # peak reverse speed over mean downstream speed q/h3
    reattachment: float = 5.0  # jet fills the depth this many h3 past the vena contracta


def synth_jet_field(h1: float, h3: float, a: float, c_c: float, q_gate: float,
                    w: float, grid: GridSpec = GridSpec(),
                    gate_x: float = 0.0) -> FlowField:
    """Time-mean field of a submerged gate jet with a recirculating roller above it.

    Downstream of the gate the jet thickness contracts from ``a`` to
    ``c_c*a`` at x_vc = gate_x + a, then spreads linearly until it fills the
    depth at reattachment. In each column

        u = U_j (1 - (z/d)^p)                        for z < d (jet)
        u = -U_r sin(pi (z - d)/(eta - d))           for z > d (roller)

    so u changes sign exactly at the jet top d, and U_j is set so that the
    depth integral of u equals q = q_gate/w. w follows from continuity and k
    peaks on the shear layer z = d.
    """
    if min(h1, h3, a, w) <= 0 or not 0 < c_c <= 1:
        raise DomainError("h1, h3, a, w must be positive and 0 < c_c <= 1")
    if not q_gate > 0:
        raise DomainError("discharge must be positive")
    if not a < h1:
        raise DomainError("gate opening must be below the upstream level")
    if not h3 > c_c * a:
        raise DomainError("tailwater must stand above the contracted jet")
    q = q_gate / w
    p = grid.jet_exponent
    shape = p / (p + 1.0)  # mean of 1 - s^p over the jet

    x = gate_x + np.linspace(-grid.upstream * h1, grid.downstream * h3, grid.nx)
    # snap the nearest grid line onto the gate; inserting one can leave a
    # sliver cell that blows up the continuity-derived w
    x[int(np.argmin(np.abs(x - gate_x)))] = gate_x
    z = np.linspace(0.0, max(h1, h3), grid.nz)
    x_vc = gate_x + a
    x_r = x_vc + grid.reattachment * h3
    d_vc = c_c * a

    # surface: upstream level, then a shallow dip behind the gate
    eta = np.where(x < gate_x, h1, h3)
    down = x > gate_x
    eta = eta - np.where(down, 0.03 * h3 * np.exp(-((x - x_vc) / (2.0 * a)) ** 2), 0.0)
    eta[np.isclose(x, gate_x)] = h1

    nx, nz = x.size, z.size
    u = np.zeros((nx, nz))
    k = np.zeros((nx, nz))
    thickness = np.full(nx, np.nan)
    for i, xi in enumerate(x):
        e = eta[i]
        if xi < gate_x - 1e-12:
            u[i] = q / e
            k[i] = (0.05 * q / e) ** 2
            continue
        if abs(xi - gate_x) <= 1e-12:
            d, r = a, 0.0
        elif xi <= x_vc:
            s = (x_vc - xi) / (x_vc - gate_x)
            d, r = d_vc + (a - d_vc) * s * s, 1.0
        elif xi < x_r:
            s = (xi - x_vc) / (x_r - x_vc)
            d, r = d_vc + (e - d_vc) * s, 1.0 - s
        else:
            d, r = e, 0.0
        d = min(d, e)
        thickness[i] = d
        u_r = grid.backflow * r * q / h3
        roller = e - d
        u_j = (q + u_r * roller * 2.0 / math.pi) / (d * shape)
        zc = z
        inside = zc < d
        u[i, inside] = u_j * (1.0 - (zc[inside] / d) ** p)
        if roller > 0 and u_r > 0:
            above = (zc >= d) & (zc <= e + WET_TOL)
            u[i, above] = -u_r * np.sin(math.pi * (zc[above] - d) / roller)
        if abs(xi - gate_x) <= 1e-12:
            u[i, zc >= a] = 0.0  # gate leaf
        # shear-layer turbulence, decaying past reattachment
        decay = math.exp(-max(xi - x_r, 0.0) / (2.0 * h3))
        sigma = 0.08 * a + 0.05 * max(xi - gate_x, 0.0)
        k[i] = (0.05 * q / e) ** 2 + (0.12 * u_j) ** 2 * decay * np.exp(-((zc - d) / sigma) ** 2)

    # continuity: w(z) = -int_0^z du/dx dz'
    dudx = np.gradient(u, x, axis=0)
    wv = np.zeros_like(u)
    wv[:, 1:] = -np.cumsum(0.5 * (dudx[:, 1:] + dudx[:, :-1]) * np.diff(z)[None, :], axis=1)
    wv[:, 0] = 0.0

    wet = z[None, :] <= eta[:, None] + WET_TOL
    for arr in (u, wv, k):
        arr[~wet] = np.nan
    return FlowField(x, z, u, wv, k, eta, gate_x=gate_x, a=a)
