"""Last-passage times, level sets, beta-points and geodesics.

Domination is weak: ``p`` precedes ``q`` when both coordinates of ``p`` are
less than or equal to those of ``q``.  A chain from ``p`` to ``q`` may use
any configuration point ``r`` with ``p <= r <= q`` and ``r != p``; the
origin is never a chain point.  With this convention the level of a
configuration point counts the point itself, and several sources (shared
ordinate 0) or sinks (shared abscissa 0) can sit on one chain.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import DominationError, TruncationError
from .pointfield import KIND_NAMES, PointConfig

STRATEGIES = ("leftmost", "rightmost", "uniform")


def precedes(p, q) -> bool:
    return p[0] <= q[0] and p[1] <= q[1]


def _check_order(p, q):
    if not precedes(p, q):
        raise DominationError(f"{tuple(p)} does not precede {tuple(q)}")


def last_passage(config: PointConfig, p, q) -> int:
    """Maximal number of configuration points on a weakly up/right chain from p to q."""
    _check_order(p, q)
    x, t, _ = config.chain_order
    mask = (x >= p[0]) & (t >= p[1]) & (x <= q[0]) & (t <= q[1])
    mask &= ~((x == p[0]) & (t == p[1]))
    if not mask.any():
        return 0
    return int(_kernels.chain_levels(x[mask]).max())


@dataclass(frozen=True, eq=False)
class LevelDecomposition:
    """Every configuration point with its level ``L(0, P)``.

    ``x``, ``t``, ``kind`` and ``level`` follow the configuration's chain
    order.  ``by_level`` lists point indices sorted by ``(level, x)`` and
    ``offsets[k-1]:offsets[k]`` slices out level ``k``.
    """

    x: np.ndarray
    t: np.ndarray
    kind: np.ndarray
    level: np.ndarray
    by_level: np.ndarray
    offsets: np.ndarray
    window: tuple[float, float]
    _beta_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_levels(self) -> int:
        return self.offsets.size - 1

    @property
    def max_complete_level(self) -> int:
        # In-window level sets are exact (L(0, Q) only sees points below-left
        # of Q), so every level that meets the window is usable.
        return self.n_levels

    def level_indices(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.n_levels:
            raise ValueError(f"level {k} outside 1..{self.n_levels}")
        return self.by_level[self.offsets[k - 1]:self.offsets[k]]

    def level_points(self, k: int) -> np.ndarray:
        """Level-``k`` points as an ``(m, 2)`` array, x increasing, t decreasing."""
        idx = self.level_indices(k)
        return np.column_stack([self.x[idx], self.t[idx]])

    @property
    def levels(self) -> list[np.ndarray]:
        return [self.level_points(k) for k in range(1, self.n_levels + 1)]

    def staircase(self, k: int) -> np.ndarray:
        """Corners of the level-``k`` boundary, alternating convex (level point) and concave (beta-point)."""
        pts = self.level_points(k)
        bx, bt = self.beta_arrays(k)
        out = np.empty((2 * pts.shape[0] - 1, 2))
        out[0::2] = pts
        out[1::2, 0] = bx
        out[1::2, 1] = bt
        return out

    def level_of(self, p) -> int:
        """Level of the configuration point at ``p``."""
        hit = np.flatnonzero((self.x == p[0]) & (self.t == p[1]))
        if hit.size == 0:
            raise ValueError(f"{tuple(p)} is not a configuration point")
        return int(self.level[hit[0]])

    def beta_arrays(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Interior concave corners of the level-``k`` staircase."""
        got = self._beta_cache.get(k)
        if got is None:
            idx = self.level_indices(k)
            got = (self.x[idx[1:]], self.t[idx[:-1]])
            self._beta_cache[k] = got
        return got

    def all_beta_points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All beta-points at once as ``(x, t, level)`` arrays."""
        lev = self.level[self.by_level]
        same = lev[1:] == lev[:-1]
        return self.x[self.by_level[1:]][same], self.t[self.by_level[:-1]][same], lev[1:][same]

    def height(self, q) -> int:
        """``L(0, q)`` for an arbitrary query point, by bisection over levels."""
        qx, qt = q
        lo, hi = 0, self.n_levels
        while lo < hi:
            k = (lo + hi + 1) // 2
            if self._level_reaches(k, qx, qt):
                lo = k
            else:
                hi = k - 1
        return lo

    def _level_reaches(self, k, qx, qt) -> bool:
        # level-k points run down-right, so the rightmost one with x <= qx
        # has the smallest ordinate among the candidates
        xs, _ = self._level_xt(k)
        i = bisect_right(xs, qx) - 1
        return i >= 0 and self._level_xt(k)[1][i] <= qt

    def _level_xt(self, k):
        key = ("pts", k)
        got = self._beta_cache.get(key)
        if got is None:
            idx = self.level_indices(k)
            got = (self.x[idx].tolist(), self.t[idx].tolist())
            self._beta_cache[key] = got
        return got


def level_decomposition(config: PointConfig) -> LevelDecomposition:
    x, t, kind = config.chain_order
    level = _kernels.chain_levels(x)
    by_level = np.lexsort((x, level))
    counts = np.bincount(level, minlength=1)[1:] if level.size else np.zeros(0, np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return LevelDecomposition(x, t, kind, level, by_level, offsets, config.window)


@dataclass(frozen=True)
class BetaPoint:
    x: float
    t: float
    level: int


def beta_points(decomp: LevelDecomposition, k: int) -> list[BetaPoint]:
    if not 1 <= k <= decomp.max_complete_level:
        raise ValueError(f"level {k} outside 1..{decomp.max_complete_level}")
    bx, bt = decomp.beta_arrays(k)
    return [BetaPoint(float(a), float(b), k) for a, b in zip(bx, bt)]


@dataclass(frozen=True, eq=False)
class BetaPath:
    """Points ``P_1..P_N``; ``points[n-1]`` is the beta-point of level ``n``."""

    points: np.ndarray
    strategy: str = ""
    truncated: bool = False

    def __len__(self):
        return self.points.shape[0]

    def ratios(self) -> np.ndarray:
        """Per-level ``t / x`` slopes."""
        return self.points[:, 1] / self.points[:, 0]


def _admissible(decomp, k, px, pt):
    bx, bt = decomp.beta_arrays(k)
    lo = int(np.searchsorted(bx, px, side="left"))
    # bt decreases along the level; keep indices with bt >= pt
    hi = int(bt.size - np.searchsorted(bt[::-1], pt, side="left")) - 1
    return lo, hi


def _extreme_in_window(decomp, k, px, pt, strategy) -> bool:
    # Above the window a level continues up-left of its first point, giving a
    # corner at that point's abscissa; it would be the leftmost candidate
    # unless a sink closes the level on the t-axis.  Symmetrically a source
    # closes the level on the x-axis for the rightmost choice.
    xs, ts = decomp._level_xt(k)
    if strategy == "leftmost":
        return xs[0] == 0.0 or xs[0] < px
    return ts[-1] == 0.0 or ts[-1] < pt


def enumerate_beta_path(decomp: LevelDecomposition, strategy: str = "leftmost",
                        seed=None) -> BetaPath:
    """Greedy beta-path from the origin, extended until no successor exists.

    ``leftmost``/``rightmost`` take the admissible beta-point of smallest /
    largest abscissa at every level, and stop as soon as that choice could
    lie outside the window.  ``uniform`` picks uniformly among the in-window
    admissible ones using ``seed`` (an int or a ``numpy`` Generator).
    ``truncated`` is set when the path ends before the last level.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if decomp.max_complete_level < 1:
        raise TruncationError("configuration has no complete level")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    px = pt = 0.0
    pts = []
    for k in range(1, decomp.max_complete_level + 1):
        if strategy != "uniform" and not _extreme_in_window(decomp, k, px, pt, strategy):
            break
        lo, hi = _admissible(decomp, k, px, pt)
        if lo > hi:
            break
        if strategy == "leftmost":
            i = lo
        elif strategy == "rightmost":
            i = hi
        else:
            i = int(rng.integers(lo, hi + 1))
        bx, bt = decomp.beta_arrays(k)
        px, pt = float(bx[i]), float(bt[i])
        pts.append((px, pt))
    arr = np.array(pts, dtype=np.float64).reshape(-1, 2)
    return BetaPath(arr, strategy, truncated=len(pts) < decomp.max_complete_level)


def validate_beta_path(decomp: LevelDecomposition, points, atol: float = 0.0) -> None:
    """Raise ``ValueError`` unless ``points[n-1]`` is a level-``n`` beta-point and the sequence is monotone.

    ``atol`` allows matching coordinates that went through a float rotation.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    prev = (0.0, 0.0)
    for n, (px, pt) in enumerate(pts, start=1):
        if n > decomp.n_levels:
            raise ValueError(f"point {n} exceeds the number of levels")
        bx, bt = decomp.beta_arrays(n)
        hit = np.flatnonzero((np.abs(bx - px) <= atol) & (np.abs(bt - pt) <= atol))
        if hit.size == 0:
            raise ValueError(f"point {n} = ({px}, {pt}) is not a beta-point of level {n}")
        if not (prev[0] <= px + atol and prev[1] <= pt + atol):
            raise ValueError(f"point {n} does not dominate point {n - 1}")
        prev = (px, pt)


@dataclass(frozen=True, eq=False)
class Geodesic:
    """A maximal chain: ``points`` are the configuration points used, in order."""

    start: tuple[float, float]
    end: tuple[float, float]
    points: np.ndarray

    def __len__(self):
        return self.points.shape[0]

    def is_chain(self) -> bool:
        pts = np.vstack([self.start, self.points, self.end]) if len(self) else np.array([self.start, self.end])
        return bool(np.all(np.diff(pts, axis=0) >= 0))


def _uppermost_below(decomp: LevelDecomposition, k: int, qx: float, qt: float):
    """Level-``k`` point dominated by ``(qx, qt)`` with the largest ordinate."""
    xs, ts = decomp._level_xt(k)
    hi = bisect_right(xs, qx) - 1          # x <= qx  <=>  index <= hi
    # ts decreases: first index with ts <= qt
    lo, h = 0, len(ts)
    while lo < h:
        mid = (lo + h) // 2
        if ts[mid] <= qt:
            h = mid
        else:
            lo = mid + 1
    if lo > hi:
        return None
    return xs[lo], ts[lo]


def maximal_path(config: PointConfig, q, decomp: LevelDecomposition | None = None) -> Geodesic:
    """One maximal chain from the origin to ``q`` (uppermost predecessor rule)."""
    decomp = decomp or level_decomposition(config)
    qx, qt = float(q[0]), float(q[1])
    n = decomp.height((qx, qt))
    pts = []
    cx, ct = qx, qt
    for k in range(n, 0, -1):
        cx, ct = _uppermost_below(decomp, k, cx, ct)
        pts.append((cx, ct))
    pts.reverse()
    return Geodesic((0.0, 0.0), (qx, qt), np.array(pts, dtype=np.float64).reshape(-1, 2))


def enclosing_geodesics(decomp: LevelDecomposition, beta: BetaPath, n: int) -> tuple[Geodesic, Geodesic]:
    """Maximal chains to ``P_n`` lying weakly above and below ``P_1..P_n``.

    Returns ``(upper, lower)``.  ``upper.points[k-1]`` is the level-``k``
    point chosen by scanning leftwards from ``P_k`` inside the dominance set
    of the level-``k+1`` choice; ``lower`` scans rightwards.
    """
    if not 0 <= n <= len(beta):
        raise ValueError(f"n={n} outside 0..{len(beta)}")
    if n == 0:
        empty = np.empty((0, 2))
        return Geodesic((0.0, 0.0), (0.0, 0.0), empty), Geodesic((0.0, 0.0), (0.0, 0.0), empty)
    pn = tuple(float(v) for v in beta.points[n - 1])
    upper = []
    cx, ct = pn
    for k in range(n, 0, -1):
        xs, ts = decomp._level_xt(k)
        bx = beta.points[k - 1, 0]
        # nearest level point left of P_k that is also dominated by the last choice
        i = min(bisect_left(xs, bx), bisect_right(xs, cx)) - 1
        if i < 0 or ts[i] > ct:
            raise TruncationError(f"no level-{k} predecessor for the upper geodesic")
        cx, ct = xs[i], ts[i]
        upper.append((cx, ct))
    lower = []
    cx, ct = pn
    for k in range(n, 0, -1):
        xs, ts = decomp._level_xt(k)
        bx = beta.points[k - 1, 0]
        # first level point right of P_k whose ordinate fits under the last choice
        i = bisect_left(xs, bx)
        j = _first_below(ts, ct)
        i = max(i, j)
        if i >= len(xs) or xs[i] > cx:
            raise TruncationError(f"no level-{k} predecessor for the lower geodesic")
        cx, ct = xs[i], ts[i]
        lower.append((cx, ct))
    upper.reverse()
    lower.reverse()
    return (Geodesic((0.0, 0.0), pn, np.array(upper)), Geodesic((0.0, 0.0), pn, np.array(lower)))


def _first_below(ts, bound):
    # ts decreasing: first index with ts[i] <= bound
    lo, hi = 0, len(ts)
    while lo < hi:
        mid = (lo + hi) // 2
        if ts[mid] <= bound:
            hi = mid
        else:
            lo = mid + 1
    return lo


def encloses(upper: Geodesic, lower: Geodesic, beta: BetaPath, n: int) -> bool:
    """Level-wise check: upper choice is up-left of ``P_k``, lower is down-right."""
    for k in range(1, n + 1):
        px, pt = beta.points[k - 1]
        ux, ut = upper.points[k - 1]
        lx, lt = lower.points[k - 1]
        if not (ux <= px and ut >= pt and lx >= px and lt <= pt):
            return False
    return True


def r_out(config: PointConfig, p, decomp: LevelDecomposition | None = None) -> np.ndarray:
    """Configuration points reachable from ``p`` on some maximal path from the origin."""
    decomp = decomp or level_decomposition(config)
    px, pt = float(p[0]), float(p[1])
    lp = decomp.level_of((px, pt))
    x, t, lev = decomp.x, decomp.t, decomp.level
    mask = (x >= px) & (t >= pt) & ~((x == px) & (t == pt))
    if not mask.any():
        return np.empty((0, 2))
    rel = _kernels.chain_levels(x[mask])
    keep = lp + rel == lev[mask]
    return np.column_stack([x[mask][keep], t[mask][keep]])


def polar(p) -> float:
    x, t = p
    if x == 0 and t == 0:
        raise ValueError("the zero vector has no direction")
    return math.atan2(t, x)


def ang(p, q) -> float:
    """Absolute difference of polar angles."""
    return abs(polar(p) - polar(q))


def cone_contains(apex, half_angle: float, q) -> bool:
    """Closed cone with vertex ``apex`` and axis along the ray from the origin through ``apex``."""
    ax, at = apex
    norm = math.hypot(ax, at)
    if norm == 0:
        raise ValueError("cone apex must be nonzero")
    if half_angle < 0:
        raise ValueError("half-angle must be nonnegative")
    dx, dt = q[0] - ax, q[1] - at
    if dx == 0 and dt == 0:
        return True
    # atan2 of cross and dot products stays exact for directions on the axis
    angle = abs(math.atan2(ax * dt - at * dx, ax * dx + at * dt))
    # closed cone; 1e-12 absorbs round-off on the boundary ray
    return angle <= half_angle + 1e-12


def shape_alpha(x: float, t: float) -> float:
    if x < 0 or t < 0:
        raise ValueError("shape function is defined on the closed quadrant")
    return 2.0 * math.sqrt(x * t)


def curvature_defect(p, q) -> float:
    """``alpha(q) - alpha(p) - alpha(q - p)`` for ``p`` preceding ``q``."""
    _check_order(p, q)
    if p[0] == q[0] and p[1] == q[1]:
        raise ValueError("curvature defect needs distinct points")
    return (shape_alpha(q[0], q[1]) - shape_alpha(p[0], p[1])
            - shape_alpha(q[0] - p[0], q[1] - p[1]))


def level_rows(decomp: LevelDecomposition):
    """Rows ``(level, x, t, kind)`` for CSV export; kind is ``point`` or ``beta``."""
    rows = []
    for k in range(1, decomp.n_levels + 1):
        for px, pt in decomp.level_points(k):
            rows.append((k, float(px), float(pt), "point"))
        bx, bt = decomp.beta_arrays(k)
        rows.extend((k, float(a), float(b), "beta") for a, b in zip(bx, bt))
    return rows


def point_kind_name(code: int) -> str:
    return KIND_NAMES[int(code)]
