"""Ensemble runner, estimators and on-disk records."""
from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .errors import NoSinkExitError, RecordError, TruncationError
from .hydro import ModelParams

log = logging.getLogger(__name__)

EXPERIMENT_IDS = ("cdf_scp", "lln_stationary", "interface_slope", "shape_check", "fluct_chi",
                  "fluct_xi", "beta_poisson", "density_profile", "angle_bounds", "tail_check",
                  "delta_straightness")
MAX_EXCLUDED = 0.10
SCHEMA = "pnglab.record/1"


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    lam: float
    rho: float
    horizon: float
    replicas: int
    seed: int = 0
    out: str | None = None
    workers: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.replicas < 1:
            raise ValueError("replica count must be at least 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        ModelParams(self.lam, self.rho)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.lam, self.rho)

    def option(self, key, default):
        return self.options.get(key, default)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        unknown = set(d) - {"experiment", "lam", "rho", "horizon", "replicas", "seed", "out",
                            "workers", "options"}
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Verdict:
    """A pass/fail judgement that always carries its effect size and tolerance."""

    name: str
    value: float
    lo: float
    hi: float
    passed: bool
    n: int
    note: str = ""

    @classmethod
    def within(cls, name, value, lo, hi, n, note=""):
        ok = bool(np.isfinite(value) and lo <= value <= hi)
        return cls(name, float(value), float(lo), float(hi), ok, int(n), note)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f" ({self.note})" if self.note else ""
        return f"{mark} {self.name}: {self.value:.4g} in [{self.lo:.4g}, {self.hi:.4g}], n={self.n}{extra}"


@dataclass
class ExperimentRecord:
    spec: ExperimentSpec
    replicas: list
    estimates: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def observables(self) -> list:
        return [r["obs"] for r in self.replicas if r["status"] == "ok"]

    @property
    def excluded_fraction(self) -> float:
        bad = sum(r["status"] != "ok" for r in self.replicas)
        return bad / len(self.replicas) if self.replicas else 0.0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def summary_dict(self) -> dict:
        return {"schema": SCHEMA, "spec": self.spec.to_dict(), "n_replicas": len(self.replicas),
                "excluded_fraction": self.excluded_fraction, "estimates": self.estimates,
                "references": self.references, "verdicts": [asdict(v) for v in self.verdicts],
                "meta": self.meta}

    def same_as(self, other: "ExperimentRecord") -> bool:
        a, b = self.summary_dict(), other.summary_dict()
        a.pop("meta"), b.pop("meta")
        return _canon(a) == _canon(b) and _canon(self.replicas) == _canon(other.replicas)


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# ---------------------------------------------------------------- estimators

def ks_distance(samples, cdf) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("ks_distance needs at least one sample")
    return float(stats.kstest(x, np.vectorize(cdf, otypes=[float])).statistic)


def fit_exponent(scales, dispersions) -> tuple[float, float]:
    """Least-squares slope of log dispersion against log scale, with its standard error."""
    s = np.asarray(scales, dtype=np.float64)
    d = np.asarray(dispersions, dtype=np.float64)
    if s.size != d.size:
        raise ValueError("scales and dispersions differ in length")
    if s.size < 3:
        raise ValueError("need at least three scales")
    if np.any(s <= 0) or np.any(d <= 0):
        raise ValueError("scales and dispersions must be positive")
    fit = stats.linregress(np.log(s), np.log(d))
    return float(fit.slope), float(fit.stderr)


@dataclass(frozen=True)
class BoxGrid:
    """``nx`` by ``nt`` equal boxes tiling ``[x0, x1] x [t0, t1]``."""

    x0: float
    x1: float
    t0: float
    t1: float
    nx: int
    nt: int

    @property
    def n_boxes(self) -> int:
        return self.nx * self.nt

    @property
    def box_area(self) -> float:
        return (self.x1 - self.x0) * (self.t1 - self.t0) / self.n_boxes

    def counts(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        h, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=[self.nx, self.nt],
                                 range=[[self.x0, self.x1], [self.t0, self.t1]])
        return h.ravel().astype(np.int64)


def dispersion_stats(counts, box_area: float) -> tuple[float, float]:
    """Intensity per unit area and variance-to-mean ratio of pooled box counts."""
    c = np.asarray(counts, dtype=np.float64).ravel()
    if c.size < 2:
        raise ValueError("dispersion index needs at least two boxes")
    mean = c.mean()
    if mean == 0:
        raise ValueError("no points in any box")
    return float(mean / box_area), float(c.var(ddof=1) / mean)


def beta_poisson_test(point_sets, grid: BoxGrid, params: ModelParams) -> tuple[float, float]:
    """Box-count intensity and dispersion index of beta-points pooled over an ensemble."""
    if params.regime != "stationary":
        raise ValueError("the Poisson property holds only for lambda * rho = 1")
    if grid.n_boxes < 2:
        raise ValueError("a single box gives no dispersion index")
    counts = np.concatenate([grid.counts(p) for p in point_sets])
    return dispersion_stats(counts, grid.box_area)


def delta_straightness_stat(config, levels: tuple[int, int], delta: float, n_points: int = 20,
                            seed=None, sector=(math.pi / 8, 3 * math.pi / 8)):
    """Pairs ``(|P|, max ang(P, Q) over Q in R_out(P))`` for sampled points ``P``.

    ``P`` is drawn among bulk points whose level lies in ``levels`` and whose
    polar angle lies in ``sector``.  ``delta`` is only validated here; the
    caller compares the pairs with an envelope ``c |P|^-delta``.
    """
    from .lpp import ang, level_decomposition, r_out

    if not 0 < delta < 1 / 3:
        raise ValueError("delta must lie in (0, 1/3)")
    d = level_decomposition(config)
    theta = np.arctan2(d.t, d.x)
    cand = np.flatnonzero((d.kind == 0) & (d.level >= levels[0]) & (d.level <= levels[1])
                          & (theta >= sector[0]) & (theta <= sector[1]))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if cand.size > n_points:
        cand = np.sort(rng.choice(cand, n_points, replace=False))
    out = []
    for i in cand:
        p = (float(d.x[i]), float(d.t[i]))
        qs = r_out(config, p, d)
        if qs.shape[0] == 0:
            continue
        out.append((math.hypot(*p), max(ang(p, q) for q in qs)))
    return out


# ------------------------------------------------------------------ running

def _replica_task(args):
    from .experiments import EXPERIMENTS

    spec_dict, i = args
    spec = ExperimentSpec.from_dict(spec_dict)
    try:
        obs = EXPERIMENTS[spec.experiment].observe(spec, i)
    except (TruncationError, NoSinkExitError) as exc:
        return {"replica": i, "status": "excluded", "reason": f"{type(exc).__name__}: {exc}", "obs": None}
    return {"replica": i, "status": "ok", "reason": None, "obs": obs}


def evaluate(spec: ExperimentSpec, replicas: list) -> tuple[dict, dict, list]:
    """Estimates, references and verdicts from per-replica rows (pure)."""
    from .experiments import EXPERIMENTS

    obs = [r["obs"] for r in replicas if r["status"] == "ok"]
    excluded = 1.0 - len(obs) / len(replicas) if replicas else 1.0
    if not obs:
        return {}, {}, [Verdict("replicas", 0, 1, math.inf, False, 0, "every replica excluded")]
    est, ref, verdicts = EXPERIMENTS[spec.experiment].evaluate(spec, obs)
    est = json.loads(_canon(est))
    ref = json.loads(_canon(ref))
    if excluded > MAX_EXCLUDED:
        verdicts = [Verdict(v.name, v.value, v.lo, v.hi, False, v.n,
                            f"invalid: {excluded:.1%} of replicas excluded") for v in verdicts]
    return est, ref, verdicts


def run_ensemble(spec: ExperimentSpec, progress=None) -> ExperimentRecord:
    """Run every replica, persist them, then evaluate verdicts.

    Replica ``i`` draws its randomness from ``(spec.seed, i)`` only, so the
    result does not depend on ``workers``.
    """
    started = time.time()
    tasks = [(spec.to_dict(), i) for i in range(spec.replicas)]
    if spec.workers == 1:
        rows = []
        for task in tasks:
            rows.append(_replica_task(task))
            if progress:
                progress(len(rows), spec.replicas)
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_replica_task, tasks, chunksize=max(1, spec.replicas // (4 * spec.workers))))
    record = ExperimentRecord(spec, rows, meta={"version": __version__, "started": started})
    if spec.out:
        persist(record, spec.out, replicas_only=True)
    record.estimates, record.references, record.verdicts = evaluate(spec, rows)
    record.meta["elapsed_s"] = time.time() - started
    if spec.out:
        from .experiments import artifacts

        path = persist(record, spec.out)
        for fname, text in artifacts(record).items():
            (path / fname).write_text(text)
    for v in record.verdicts:
        log.info(v.line())
    return record


def verify(record: ExperimentRecord) -> bool:
    """Recompute the verdicts from the stored replica rows and compare."""
    est, ref, verdicts = evaluate(record.spec, record.replicas)
    return (_canon(est) == _canon(record.estimates) and _canon(ref) == _canon(record.references)
            and [asdict(v) for v in verdicts] == [asdict(v) for v in record.verdicts])


# -------------------------------------------------------------- persistence

def record_dir(out, spec: ExperimentSpec) -> Path:
    return Path(out) / f"{spec.experiment}-seed{spec.seed}"


def persist(record: ExperimentRecord, out, replicas_only: bool = False) -> Path:
    """Write ``replicas.jsonl`` (one replica per line) and ``summary.json``."""
    path = record_dir(out, record.spec)
    path.mkdir(parents=True, exist_ok=True)
    tmp = path / "replicas.jsonl.tmp"
    with open(tmp, "w") as fh:
        for row in record.replicas:
            fh.write(json.dumps(row, sort_keys=True, default=_json_default) + "\n")
    os.replace(tmp, path / "replicas.jsonl")
    if not replicas_only:
        tmp = path / "summary.json.tmp"
        tmp.write_text(json.dumps(record.summary_dict(), indent=2, sort_keys=True, default=_json_default))
        os.replace(tmp, path / "summary.json")
    return path


_ROW_KEYS = {"replica", "status", "reason", "obs"}
_SUMMARY_KEYS = {"schema", "spec", "n_replicas", "excluded_fraction", "estimates", "references",
                 "verdicts", "meta"}


def load(path) -> ExperimentRecord:
    """Read a record directory written by :func:`persist`."""
    path = Path(path)
    if path.is_file():
        path = path.parent
    summary_file, rows_file = path / "summary.json", path / "replicas.jsonl"
    for f in (summary_file, rows_file):
        if not f.exists():
            raise RecordError(f"{f}: missing")
    try:
        summary = json.loads(summary_file.read_text())
    except json.JSONDecodeError as exc:
        raise RecordError(f"{summary_file}: not valid JSON ({exc})") from None
    if not isinstance(summary, dict) or set(summary) != _SUMMARY_KEYS or summary["schema"] != SCHEMA:
        raise RecordError(f"{summary_file}: schema mismatch")
    rows = []
    with open(rows_file) as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"{rows_file}:{lineno}: corrupt line ({exc.msg})") from None
            if not isinstance(row, dict) or set(row) != _ROW_KEYS:
                raise RecordError(f"{rows_file}:{lineno}: schema mismatch")
            if row["replica"] != lineno - 1:
                raise RecordError(f"{rows_file}:{lineno}: expected replica {lineno - 1}, found {row['replica']}")
            rows.append(row)
    if len(rows) != summary["n_replicas"]:
        raise RecordError(f"{rows_file}: partial file, {len(rows)} of {summary['n_replicas']} replicas")
    try:
        spec = ExperimentSpec.from_dict(summary["spec"])
        verdicts = [Verdict(**v) for v in summary["verdicts"]]
    except (TypeError, ValueError) as exc:
        raise RecordError(f"{summary_file}: {exc}") from None
    return ExperimentRecord(spec, rows, summary["estimates"], summary["references"], verdicts, summary["meta"])
