"""Hammersley's interacting particle process with sources and sinks.

Particles live on ``(0, x_max)``.  Sources are the particles present at time
0.  A bulk point ``(x, t)`` pulls the nearest particle to the right of ``x``
down to ``x``, or creates a new particle if none is there.  A sink at
``(0, t)`` removes the leftmost particle; with no particle left it fires
idle.  A particle's level, ``S(t) + rank`` with ``S`` the sink count, is
constant over its life, so trajectories are indexed by level.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NoSinkExitError, TruncationError
from .pointfield import PointConfig


@dataclass
class Trajectory:
    """Space-time path of one particle.

    ``jumps`` holds ``(time, new_position)`` pairs.  ``birth`` is
    ``(origin, time, position)`` with origin ``source``, ``bulk`` or
    ``window`` (an idle sink, whose particle would have come from beyond the
    window).  ``death`` is ``(cause, time)`` with cause ``sink`` or ``None``
    while alive at the end of the window.
    """

    level: int
    birth: tuple
    jumps: list = field(default_factory=list)
    death: tuple | None = None

    @property
    def ghost(self) -> bool:
        return self.birth[0] == "window"

    def corners(self) -> list[tuple[float, float]]:
        """Convex corners (configuration points) sorted by increasing x."""
        if self.ghost:
            return [(0.0, self.death[1])]
        origin, t0, x0 = self.birth
        pts = [(x0, t0)] + [(x, t) for t, x in self.jumps]
        if self.death is not None:
            pts.append((0.0, self.death[1]))
        return pts[::-1]

    def left_turns(self) -> list[tuple[float, float]]:
        """Concave corners: ``(old position, jump time)`` for every jump and the sink exit."""
        if self.ghost:
            return []
        out = []
        x = self.birth[2]
        for t, nx in self.jumps:
            out.append((x, t))
            x = nx
        if self.death is not None:
            out.append((x, self.death[1]))
        return out[::-1]

    def position_at(self, t: float) -> float | None:
        if self.ghost or t < self.birth[1] or (self.death is not None and t >= self.death[1]):
            return None
        x = self.birth[2]
        for tj, nx in self.jumps:
            if tj > t:
                break
            x = nx
        return x


@dataclass(frozen=True, eq=False)
class HammersleyRun:
    config: PointConfig
    trajectories: list
    sink_exits: list

    def by_level(self) -> dict:
        return {tr.level: tr for tr in self.trajectories}

    def positions(self, t: float) -> np.ndarray:
        """Sorted particle positions after all events up to time ``t``."""
        return positions_at_time(self.config, t)


def evolve(config: PointConfig) -> HammersleyRun:
    pos: list[float] = list(map(float, config.sources))
    ids: list[int] = list(range(len(pos)))
    trajs = [Trajectory(k + 1, ("source", 0.0, x)) for k, x in enumerate(pos)]
    start = 0
    n_sinks = 0
    exits = []
    bx, bt, sk = config.bulk_x.tolist(), config.bulk_t.tolist(), config.sinks.tolist()
    i = j = 0
    while i < len(bx) or j < len(sk):
        if j >= len(sk) or (i < len(bx) and bt[i] < sk[j]):
            x, t = bx[i], bt[i]
            i += 1
            k = bisect_right(pos, x, lo=start)
            if k == len(pos):
                trajs.append(Trajectory(n_sinks + len(pos) - start + 1, ("bulk", t, x)))
                pos.append(x)
                ids.append(len(trajs) - 1)
            else:
                trajs[ids[k]].jumps.append((t, x))
                pos[k] = x
        else:
            t = sk[j]
            j += 1
            n_sinks += 1
            if start < len(pos):
                trajs[ids[start]].death = ("sink", t)
                exits.append((t, pos[start]))
                start += 1
            else:
                trajs.append(Trajectory(n_sinks, ("window", t, math.inf), death=("sink", t)))
    trajs.sort(key=lambda tr: tr.level)
    return HammersleyRun(config, trajs, exits)


def positions_at_time(config: PointConfig, t: float) -> np.ndarray:
    """Sorted in-window particle positions at time ``t``."""
    return _kernels.particle_positions(config.bulk_x, config.bulk_t, config.sources, config.sinks, float(t))


def count_N(run: HammersleyRun, x: float, t: float) -> int:
    """Particles in ``(0, x]`` at time ``t`` plus sinks in ``(0, t]``."""
    xm, tm = run.config.window
    if not (0 <= x <= xm and 0 <= t <= tm):
        raise ValueError(f"query ({x}, {t}) outside the window {run.config.window}")
    pos = run.positions(t)
    return int(np.searchsorted(pos, x, side="right") + np.searchsorted(run.config.sinks, t, side="right"))


@dataclass(frozen=True, eq=False)
class ScpTrajectory:
    """Jump sequence of a second-class particle in original ``(x, t)`` coordinates.

    ``times[0] = positions[0] = 0``.  For the normal particle, ``t_end`` is
    the time up to which the path is fixed by in-window events.  For the dual
    one, the path is known up to the last recorded jump.
    """

    times: np.ndarray
    positions: np.ndarray
    flavor: str
    truncated: bool
    t_end: float

    def __len__(self):
        return self.times.size - 1

    @property
    def points(self) -> np.ndarray:
        """Jump points ``(X_{tau_n}, tau_n)``, ``n >= 1``, as an ``(N, 2)`` array."""
        return np.column_stack([self.positions[1:], self.times[1:]])

    def position_at(self, t: float) -> float:
        if t < 0:
            raise ValueError("time must be nonnegative")
        if self.flavor == "normal":
            if t > self.t_end:
                raise TruncationError(f"trajectory known only up to t={self.t_end}")
            return float(self.positions[np.searchsorted(self.times, t, side="right") - 1])
        # dual: X*_t = x_m with m the first jump index (m >= 1) at or after t
        m = int(np.searchsorted(self.times[1:], t, side="left")) + 1
        if m >= self.times.size:
            raise TruncationError(f"dual trajectory leaves the window before t={t}")
        return float(self.positions[m])

    def positions_at(self, ts) -> np.ndarray:
        return np.array([self.position_at(float(t)) for t in np.atleast_1d(ts)])


def _scp(config: PointConfig, t_stop: float):
    xs, ts, nj, status, t_end = _kernels.scp_run(config.bulk_x, config.bulk_t, config.sources,
                                                 config.sinks, float(t_stop))
    return xs[:nj].copy(), ts[:nj].copy(), int(status), float(t_end)


def second_class(config: PointConfig, horizon: float | None = None) -> ScpTrajectory:
    """Normal second-class particle started at the origin."""
    t_stop = config.window[1] if horizon is None else min(float(horizon), config.window[1])
    xs, ts, status, t_end = _scp(config, t_stop)
    if status == _kernels.SCP_NO_SINK_EXIT:
        raise NoSinkExitError("no sink exit inside the window")
    return ScpTrajectory(ts, xs, "normal", status == _kernels.SCP_TRUNCATED, t_end)


def dual_second_class(config: PointConfig) -> ScpTrajectory:
    """Dual particle: the normal engine on the transposed configuration, mapped back."""
    xs, ts, status, t_end = _scp(config.transpose(), config.window[0])
    if status == _kernels.SCP_NO_SINK_EXIT:
        raise NoSinkExitError("no source is consumed in the dual sweep")
    return ScpTrajectory(xs, ts, "dual", status == _kernels.SCP_TRUNCATED, float(xs[-1]))


def trajectory_rows(run: HammersleyRun):
    """Rows ``(particle, time, position)``; deaths are reported at position 0."""
    rows = []
    for tr in run.trajectories:
        if tr.ghost:
            continue
        rows.append((tr.level, tr.birth[1], tr.birth[2]))
        rows.extend((tr.level, t, x) for t, x in tr.jumps)
        if tr.death is not None:
            rows.append((tr.level, tr.death[1], 0.0))
    return rows


def spacetime_svg(run: HammersleyRun, scp: ScpTrajectory | None = None, size: int = 600) -> str:
    """Space-time diagram: trajectories as up/left staircases, left turns as dots."""
    xm, tm = run.config.window
    sx, st = size / xm, size / tm

    def px(x, t):
        return f"{x * sx:.2f},{size - t * st:.2f}"

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white" stroke="black"/>']
    for tr in run.trajectories:
        if tr.ghost:
            continue
        x, t = tr.birth[2], tr.birth[1]
        pts = [px(x, t)]
        for tj, nx in tr.jumps:
            pts += [px(x, tj), px(nx, tj)]
            x = nx
        t_last = tr.death[1] if tr.death else tm
        pts.append(px(x, t_last))
        if tr.death:
            pts.append(px(0.0, t_last))
        parts.append(f'<polyline fill="none" stroke="#555" stroke-width="0.6" points="{" ".join(pts)}"/>')
        for bx_, bt_ in tr.left_turns():
            cx, cy = px(bx_, bt_).split(",")
            parts.append(f'<circle cx="{cx}" cy="{cy}" r="1.2" fill="#c33"/>')
    if scp is not None:
        pts = []
        for i in range(scp.times.size):
            if i and scp.flavor == "normal":
                pts.append(px(scp.positions[i - 1], scp.times[i]))
            pts.append(px(scp.positions[i], scp.times[i]))
        parts.append(f'<polyline fill="none" stroke="#16c" stroke-width="1.5" points="{" ".join(pts)}"/>')
    parts.append("</svg>")
    return "\n".join(parts)
