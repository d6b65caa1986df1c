"""Polynuclear growth with external sources and the two-type interface.

The simulation sweeps anti-diagonals ``u = x + t`` of the original quadrant
(``u = sqrt(2) s``) and keeps every step in its exact original coordinates.
Rotated values are produced only on output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .pointfield import SQRT2, PointConfig, rotate_array, tie_coin

ORIGIN_BULK, ORIGIN_PLUS, ORIGIN_MINUS = 0, 1, 2
ORIGIN_NAMES = ("bulk", "plus-boundary", "minus-boundary")


@dataclass(frozen=True, eq=False)
class Nucleations:
    """Nucleation events sorted by time, with their pre-rotation coordinates."""

    x: np.ndarray
    t: np.ndarray
    origin: np.ndarray
    seed: int = 0
    replica: int = 0

    @property
    def z(self) -> np.ndarray:
        return rotate_array(self.x, self.t)[0]

    @property
    def s(self) -> np.ndarray:
        return rotate_array(self.x, self.t)[1]

    def __len__(self):
        return self.x.size


def nucleations_from(config: PointConfig) -> Nucleations:
    """Bulk points become interior nucleations, sources land on ``z = s``, sinks on ``z = -s``."""
    ns, nk = config.sources.size, config.sinks.size
    x = np.concatenate([config.bulk_x, config.sources, np.zeros(nk)])
    t = np.concatenate([config.bulk_t, np.zeros(ns), config.sinks])
    origin = np.concatenate([np.full(config.bulk_x.size, ORIGIN_BULK, np.int8),
                             np.full(ns, ORIGIN_PLUS, np.int8), np.full(nk, ORIGIN_MINUS, np.int8)])
    order = np.argsort(x + t, kind="stable")
    return Nucleations(x[order], t[order], origin[order], config.seed, config.replica)


@dataclass(frozen=True, eq=False)
class HeightProfile:
    """Piecewise-constant height built from step world-lines.

    An up-step sits on the vertical line ``x = anchor``, a down-step on the
    horizontal line ``t = anchor``; each lives for ``birth <= u < death``.
    """

    kind: np.ndarray
    anchor: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    label: np.ndarray
    horizon: float

    @property
    def u_stop(self) -> float:
        return self.horizon * SQRT2

    def height_xt(self, x, t) -> np.ndarray:
        """``h`` at original-coordinate points (vectorised)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        u = x + t
        if np.any(u > self.u_stop * (1 + 1e-12)):
            raise ValueError("query beyond the simulated horizon")
        up = self.kind == _kernels.STEP_UP
        dn = self.kind == _kernels.STEP_DOWN
        out = np.empty(x.size, np.int64)
        for lo in range(0, x.size, 256):
            sl = slice(lo, lo + 256)
            uu = u[sl, None]
            alive = (self.birth[None, :] <= uu) & (uu < self.death[None, :])
            n_up = (alive & up & (self.anchor[None, :] <= x[sl, None])).sum(axis=1)
            n_dn = (alive & dn & (self.anchor[None, :] > t[sl, None])).sum(axis=1)
            out[sl] = n_up - n_dn
        return out

    def height(self, z, s) -> np.ndarray:
        """``h(z, s)``; zero outside the light cone ``|z| <= s``."""
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        inside = np.abs(z) <= s
        out = np.zeros(z.size, np.int64)
        if inside.any():
            x = (s[inside] + z[inside]) / SQRT2
            t = (s[inside] - z[inside]) / SQRT2
            out[inside] = self.height_xt(np.maximum(x, 0.0), np.maximum(t, 0.0))
        return out

    def grid_rows(self, nz: int = 41, ns: int = 21):
        """Rows ``(z, s, h)`` on a regular grid covering the light cone."""
        rows = []
        for s in np.linspace(0.0, self.horizon, ns):
            zs = np.linspace(-s, s, nz)
            for z, h in zip(zs, self.height(zs, np.full(nz, s))):
                rows.append((float(z), float(s), int(h)))
        return rows


@dataclass(frozen=True, eq=False)
class InterfaceTrace:
    """Competition-interface collisions; entry 0 is the start ``(0, 0)``.

    ``a`` and ``b`` are the exact original coordinates of each collision.
    """

    phi: np.ndarray
    sigma: np.ndarray
    levels: np.ndarray
    a: np.ndarray
    b: np.ndarray
    horizon: float

    def __len__(self):
        return self.phi.size - 1

    @property
    def points_xt(self) -> np.ndarray:
        return np.column_stack([self.a, self.b])

    def phi_at(self, s: float) -> float:
        if s < 0 or s > self.horizon:
            raise ValueError(f"s={s} outside [0, {self.horizon}]")
        return float(self.phi[np.searchsorted(self.sigma, s, side="right") - 1])


@dataclass(frozen=True, eq=False)
class TwoTypeRun:
    profile: HeightProfile
    interface: InterfaceTrace
    surface_kind: np.ndarray
    surface_anchor: np.ndarray
    surface_type: np.ndarray

    def __iter__(self):
        return iter((self.profile, self.interface))


def _run(nuc: Nucleations, horizon: float, two_type: bool):
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    tie_left = bool(tie_coin(nuc.seed, nuc.replica)) if two_type else True
    return _kernels.png_run(nuc.x, nuc.t, horizon * SQRT2, two_type, tie_left)


def _profile(res, horizon) -> HeightProfile:
    kind, anchor, birth, death, label = res[:5]
    keep = kind != _kernels.STEP_MARK
    return HeightProfile(kind[keep], anchor[keep], birth[keep], death[keep], label[keep], float(horizon))


def evolve_png(nucleations: Nucleations, horizon: float) -> HeightProfile:
    """Single-type growth up to time ``horizon``."""
    return _profile(_run(nucleations, horizon, False), horizon)


def evolve_two_type(nucleations: Nucleations, horizon: float) -> TwoTypeRun:
    """Two-type growth; unpacks as ``(profile, interface)``."""
    res = _run(nucleations, horizon, True)
    kind, anchor = res[0], res[1]
    ia, ib, ilev = res[5], res[6], res[7]
    surface, stype = res[9], res[10]
    a = np.concatenate([[0.0], ia])
    b = np.concatenate([[0.0], ib])
    trace = InterfaceTrace((a - b) / SQRT2, (a + b) / SQRT2, np.concatenate([[0], ilev]), a, b, float(horizon))
    return TwoTypeRun(_profile(res, horizon), trace, kind[surface], anchor[surface], stype)


def surface_layers(run: TwoTypeRun):
    """Final surface as ``(x_left, x_right, height, type)`` gaps along ``u = u_stop``."""
    u = run.profile.u_stop
    kind, anchor = run.surface_kind, run.surface_anchor
    pos = np.where(kind == _kernels.STEP_UP, anchor,
                   np.where(kind == _kernels.STEP_DOWN, u - anchor, (u + anchor) / 2))
    edges = np.concatenate([[0.0], pos, [u]])
    types = np.concatenate([[1], run.surface_type])
    h = np.concatenate([[0], np.cumsum(np.where(kind == _kernels.STEP_UP, 1,
                                                np.where(kind == _kernels.STEP_DOWN, -1, 0)))])
    return [(float(edges[i]), float(edges[i + 1]), int(h[i]), int(types[i])) for i in range(types.size)]


def types_separated(run: TwoTypeRun) -> bool:
    """Top-layer check: at every level with a collision, type 1 lies left of the interface."""
    u = run.profile.u_stop
    phi = run.interface.phi
    for xl, xr, h, ty in surface_layers(run):
        if xr <= xl:
            continue
        zl, zr = (2 * xl - u) / SQRT2, (2 * xr - u) / SQRT2
        cut = 0.0 if h == 0 else (phi[h] if h < phi.size else None)
        if cut is None:
            continue
        if ty == 1 and zl > cut + 1e-9:
            return False
        if ty == 2 and zr < cut - 1e-9:
            return False
    return True


def layer_svg(profile: HeightProfile, trace: InterfaceTrace | None = None, size: int = 600) -> str:
    """Step world-lines in the ``(z, s)`` plane, coloured by type, interface overlaid."""
    S = profile.horizon
    u_stop = profile.u_stop
    scale = size / (2 * S)

    def pt(x, t):
        z, s = (x - t) / SQRT2, (x + t) / SQRT2
        return (z + S) * scale, (S - s) * scale

    height = int(S * scale)
    colors = {0: "#444", 1: "#c33", 2: "#16c"}
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{height}" '
             f'viewBox="0 0 {size} {height}">', f'<rect width="{size}" height="{height}" fill="white"/>']
    for k, a, b0, d, lab in zip(profile.kind, profile.anchor, profile.birth, profile.death, profile.label):
        u1 = min(d, u_stop)
        if k == _kernels.STEP_UP:
            (x0, y0), (x1, y1) = pt(a, b0 - a), pt(a, u1 - a)
        else:
            (x0, y0), (x1, y1) = pt(b0 - a, a), pt(u1 - a, a)
        parts.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                     f'stroke="{colors[int(lab)]}" stroke-width="0.5"/>')
    if trace is not None and len(trace):
        pts = " ".join("%.2f,%.2f" % pt(a, b) for a, b in zip(trace.a, trace.b))
        parts.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{pts}"/>')
    parts.append("</svg>")
    return "\n".join(parts)
