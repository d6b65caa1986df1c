"""Seeded Poisson configurations and the 45 degree rotation between pictures.

A configuration holds three independent Poisson processes inside the
window ``(0, x_max) x (0, t_max)``:

* bulk points of intensity 1 in the open quadrant,
* sources of intensity ``lam`` on the x-axis (points ``(x, 0)``),
* sinks of intensity ``rho`` on the t-axis (points ``(0, t)``).

Random streams
--------------
Every stream is a ``numpy.random.Philox`` generator (counter based) seeded
from ``SeedSequence(seed, spawn_key=(replica, stream))`` with ``stream`` one
of :data:`STREAM_BULK`, :data:`STREAM_SOURCES`, :data:`STREAM_SINKS` or
:data:`STREAM_AUX`.  Distinct ``(replica, stream)`` pairs never share a
substream, so replicas can be generated in any order or in parallel.
:data:`STREAM_REPAIR` only feeds the (practically never used) resampling of
colliding coordinates.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)

STREAM_BULK = 0
STREAM_SOURCES = 1
STREAM_SINKS = 2
STREAM_AUX = 3
STREAM_REPAIR = 4

KIND_BULK = 0
KIND_SOURCE = 1
KIND_SINK = 2
KIND_NAMES = ("bulk", "source", "sink")

_MAX_SEED = 2**64


class _Planar(NamedTuple):
    x: float
    t: float


class _Rotated(NamedTuple):
    z: float
    s: float


class PlanarPoint(_Planar):
    """Point of the closed quadrant."""

    __slots__ = ()

    def __new__(cls, x, t):
        if not (x >= 0 and t >= 0):
            raise ValueError(f"({x}, {t}) is outside the quadrant")
        return super().__new__(cls, float(x), float(t))


class RotatedPoint(_Rotated):
    __slots__ = ()

    def __new__(cls, z, s):
        if not s >= 0:
            raise ValueError(f"time coordinate must be nonnegative, got {s}")
        return super().__new__(cls, float(z), float(s))


def stream_rng(seed: int, replica: int, stream: int) -> np.random.Generator:
    """Generator for one ``(seed, replica, stream)`` substream."""
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if replica < 0:
        raise ValueError(f"replica index must be nonnegative, got {replica}")
    ss = np.random.SeedSequence(seed, spawn_key=(replica, stream))
    return np.random.Generator(np.random.Philox(ss))


def tie_coin(seed: int, replica: int = 0) -> bool:
    """Fair coin reserved for measure-zero tie breaks (aux stream)."""
    return bool(stream_rng(seed, replica, STREAM_AUX).integers(0, 2))


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PointConfig:
    """One realization of the bulk, source and sink processes.

    ``bulk_x``/``bulk_t`` are stored in increasing time order; ``sources``
    and ``sinks`` are sorted.  Arrays are read-only.
    """

    bulk_x: np.ndarray
    bulk_t: np.ndarray
    sources: np.ndarray
    sinks: np.ndarray
    lam: float
    rho: float
    window: tuple[float, float]
    seed: int = 0
    replica: int = 0
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "bulk_x", _frozen(self.bulk_x))
        object.__setattr__(self, "bulk_t", _frozen(self.bulk_t))
        object.__setattr__(self, "sources", _frozen(self.sources))
        object.__setattr__(self, "sinks", _frozen(self.sinks))
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if not self._validated:
            self.validate()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_points(cls, bulk=(), sources=(), sinks=(), *, lam=0.0, rho=0.0,
                    window=None, seed=0, replica=0) -> "PointConfig":
        """Build a configuration from explicit coordinates (tests, fixtures)."""
        bulk = np.asarray(bulk, dtype=np.float64).reshape(-1, 2)
        sources = np.sort(np.asarray(sources, dtype=np.float64).ravel())
        sinks = np.sort(np.asarray(sinks, dtype=np.float64).ravel())
        if window is None:
            xm = max([1.0, *bulk[:, 0], *sources]) + 1.0
            tm = max([1.0, *bulk[:, 1], *sinks]) + 1.0
            window = (xm, tm)
        order = np.argsort(bulk[:, 1], kind="stable")
        return cls(bulk[order, 0], bulk[order, 1], sources, sinks,
                   float(lam), float(rho), tuple(window), seed, replica)

    def validate(self) -> None:
        xm, tm = self.window
        if not (xm > 0 and tm > 0):
            raise ValueError(f"window must be positive, got {self.window}")
        bx, bt = self.bulk_x, self.bulk_t
        if bx.shape != bt.shape:
            raise ValueError("bulk coordinate arrays differ in length")
        if bx.size and (bx.min() <= 0 or bx.max() >= xm or bt.min() <= 0 or bt.max() >= tm):
            raise ValueError("bulk points must lie strictly inside the window")
        if self.sources.size and (self.sources.min() <= 0 or self.sources.max() >= xm):
            raise ValueError("sources must lie in (0, x_max)")
        if self.sinks.size and (self.sinks.min() <= 0 or self.sinks.max() >= tm):
            raise ValueError("sinks must lie in (0, t_max)")
        if np.any(np.diff(bt) < 0):
            raise ValueError("bulk points must be stored in increasing time order")
        if _has_duplicates(np.concatenate([bx, self.sources])):
            raise ValueError("duplicate abscissas among bulk points and sources")
        if _has_duplicates(np.concatenate([bt, self.sinks])):
            raise ValueError("duplicate ordinates among bulk points and sinks")

    # -- views ----------------------------------------------------------------

    @property
    def bulk(self) -> np.ndarray:
        return np.column_stack([self.bulk_x, self.bulk_t])

    @property
    def n_points(self) -> int:
        return self.bulk_x.size + self.sources.size + self.sinks.size

    @cached_property
    def chain_order(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All points as ``(x, t, kind)`` sorted by ``(t, x)``.

        Sources come first (shared ordinate 0, increasing x), then bulk
        points and sinks merged by time.  This is the sweep order used by
        every chain computation.
        """
        ns = self.sources.size
        pos = np.searchsorted(self.bulk_t, self.sinks)
        x = np.insert(self.bulk_x, pos, 0.0)
        t = np.insert(self.bulk_t, pos, self.sinks)
        kind = np.insert(np.full(self.bulk_x.size, KIND_BULK, np.int8), pos, KIND_SINK)
        x = np.concatenate([self.sources, x])
        t = np.concatenate([np.zeros(ns), t])
        kind = np.concatenate([np.full(ns, KIND_SOURCE, np.int8), kind])
        for a in (x, t, kind):
            a.flags.writeable = False
        return x, t, kind

    def transpose(self) -> "PointConfig":
        """Swap the axes: sources become sinks and vice versa."""
        order = np.argsort(self.bulk_x, kind="stable")
        return PointConfig(self.bulk_t[order], self.bulk_x[order], self.sinks, self.sources,
                           self.rho, self.lam, (self.window[1], self.window[0]),
                           self.seed, self.replica, _validated=True)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "rho": self.rho,
            "window": list(self.window),
            "seed": self.seed,
            "replica": self.replica,
            "bulk_x": self.bulk_x.tolist(),
            "bulk_t": self.bulk_t.tolist(),
            "sources": self.sources.tolist(),
            "sinks": self.sinks.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PointConfig":
        missing = {"lambda", "rho", "window", "seed", "bulk_x", "bulk_t", "sources", "sinks"} - set(doc)
        if missing:
            raise ValueError(f"configuration document lacks fields: {sorted(missing)}")
        return cls(doc["bulk_x"], doc["bulk_t"], doc["sources"], doc["sinks"],
                   float(doc["lambda"]), float(doc["rho"]), tuple(doc["window"]),
                   int(doc["seed"]), int(doc.get("replica", 0)))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "PointConfig":
        p = Path(text_or_path) if not str(text_or_path).lstrip().startswith("{") else None
        text = p.read_text() if p is not None else str(text_or_path)
        return cls.from_dict(json.loads(text))

    def same_as(self, other: "PointConfig") -> bool:
        """Bitwise equality of all coordinates and parameters."""
        return (self.lam == other.lam and self.rho == other.rho and self.window == other.window
                and np.array_equal(self.bulk_x, other.bulk_x)
                and np.array_equal(self.bulk_t, other.bulk_t)
                and np.array_equal(self.sources, other.sources)
                and np.array_equal(self.sinks, other.sinks))


def _has_duplicates(values: np.ndarray) -> bool:
    if values.size < 2:
        return False
    s = np.sort(values)
    return bool(np.any(s[1:] == s[:-1]))


def _duplicate_mask(values: np.ndarray, others: np.ndarray) -> np.ndarray:
    allv = np.concatenate([values, others])
    s = np.sort(allv)
    dup = s[1:][s[1:] == s[:-1]]
    if dup.size == 0:
        return np.zeros(values.size, dtype=bool)
    return np.isin(values, dup)


def _sorted_uniforms(rng: np.random.Generator, n: int, upper: float) -> np.ndarray:
    # Uniform order statistics from normalized exponential spacings: O(n), no sort.
    e = rng.standard_exponential(n + 1)
    cs = np.cumsum(e)
    return upper * (cs[:n] / cs[n])


def sample_config(lam: float, rho: float, window, seed: int, replica: int = 0) -> PointConfig:
    """Sample a configuration; identical arguments give identical output."""
    lam, rho = float(lam), float(rho)
    if not (lam >= 0 and rho >= 0):
        raise ValueError(f"intensities must be nonnegative, got lambda={lam}, rho={rho}")
    xm, tm = float(window[0]), float(window[1])
    if not (xm > 0 and tm > 0 and math.isfinite(xm) and math.isfinite(tm)):
        raise ValueError(f"window must have positive finite sides, got {window}")

    g_bulk = stream_rng(seed, replica, STREAM_BULK)
    g_src = stream_rng(seed, replica, STREAM_SOURCES)
    g_snk = stream_rng(seed, replica, STREAM_SINKS)

    n = int(g_bulk.poisson(xm * tm))
    bt = _sorted_uniforms(g_bulk, n, tm)
    bx = g_bulk.random(n) * xm
    sources = np.sort(g_src.random(int(g_src.poisson(lam * xm))) * xm) if lam > 0 else np.empty(0)
    sinks = np.sort(g_snk.random(int(g_snk.poisson(rho * tm))) * tm) if rho > 0 else np.empty(0)

    # Ties and boundary hits have probability ~1e-10 per replica; resample them
    # from the aux stream so every chain comparison sees distinct coordinates.
    aux = None
    while True:
        bad_x = (bx <= 0) | _duplicate_mask(bx, sources)
        bad_t = (bt <= 0) | (bt >= tm) | _duplicate_mask(bt, sinks)
        bad_s = (sources <= 0) | _duplicate_mask(sources, bx)
        bad_k = (sinks <= 0) | _duplicate_mask(sinks, bt)
        if not (bad_x.any() or bad_t.any() or bad_s.any() or bad_k.any()):
            break
        aux = aux or stream_rng(seed, replica, STREAM_REPAIR)
        bx[bad_x] = aux.random(int(bad_x.sum())) * xm
        bt[bad_t] = aux.random(int(bad_t.sum())) * tm
        sources[bad_s] = aux.random(int(bad_s.sum())) * xm
        sinks[bad_k] = aux.random(int(bad_k.sum())) * tm
        order = np.argsort(bt, kind="stable")
        bx, bt = bx[order], bt[order]
        sources.sort()
        sinks.sort()

    return PointConfig(bx, bt, sources, sinks, lam, rho, (xm, tm), seed, replica, _validated=True)


def rotate(p) -> RotatedPoint:
    """Map ``(x, t)`` to ``(z, s)``; the x-axis lands on ``z = s``."""
    x, t = p
    return RotatedPoint((x - t) / SQRT2, (x + t) / SQRT2)


def unrotate(q) -> PlanarPoint:
    z, s = q
    if abs(z) > s:
        raise ValueError(f"({z}, {s}) lies outside the light cone |z| <= s")
    return PlanarPoint((s + z) / SQRT2, (s - z) / SQRT2)


def rotate_array(x, t) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    return (x - t) / SQRT2, (x + t) / SQRT2


def unrotate_array(z, s) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if np.any(np.abs(z) > s):
        raise ValueError("points outside the light cone |z| <= s")
    return (s + z) / SQRT2, (s - z) / SQRT2
