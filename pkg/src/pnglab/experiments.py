"""Per-experiment replica observables and verdict rules.

Each experiment pairs ``observe(spec, i)``, which runs replica ``i`` and
returns plain JSON data, with ``evaluate(spec, observables)``, a pure
function returning ``(estimates, references, verdicts)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hydro, lpp, png, svgplot
from .hammersley import dual_second_class, positions_at_time, second_class
from .harness import (BoxGrid, Verdict, delta_straightness_stat, dispersion_stats,
                      fit_exponent, ks_distance)
from .pointfield import SQRT2, STREAM_AUX, sample_config, stream_rng


@dataclass(frozen=True)
class Experiment:
    defaults: dict
    observe: Callable
    evaluate: Callable
    summary: str


def _config(spec, i, window):
    return sample_config(spec.lam, spec.rho, window, spec.seed, i)


def _mean(values):
    return float(np.mean(values))


def _scales(spec, default_fracs):
    return [float(s) for s in spec.option("scales", [f * spec.horizon for f in default_fracs])]


def _speed(spec):
    # macroscopic second-class velocity bound lambda^-2 (capped when lambda is tiny)
    return min(1.0 / spec.lam ** 2, 16.0) if spec.lam > 0 else 16.0


# ----------------------------------------------------------------- cdf_scp

def _cdf_observe(spec, i):
    h = spec.horizon
    xf = spec.option("x_factor", _speed(spec) + 0.4)
    c = _config(spec, i, (xf * h, h))
    scp = second_class(c, h)
    return {"r": scp.position_at(h) / h}


def _cdf_evaluate(spec, obs):
    r = np.array([o["r"] for o in obs])
    params = spec.params
    tol = spec.option("ks_tol", 0.06)
    ks = ks_distance(r, lambda v: hydro.z_cdf(v, params))
    lo, hi = hydro.fan_slopes(params)
    est = {"ks": ks, "mean_r": _mean(r), "min_r": float(r.min()), "max_r": float(r.max())}
    ref = {"support": [lo, hi]}
    return est, ref, [Verdict.within("ks_distance", ks, 0.0, tol, r.size)]


# ---------------------------------------------------------- lln_stationary

def _lln_observe(spec, i):
    h = spec.horizon
    v = _speed(spec)
    c = _config(spec, i, (max(2.0 * v * h, SQRT2 * h), max(1.3 * h, SQRT2 * h)))
    x = second_class(c, h).position_at(h)
    xd = dual_second_class(c).position_at(h)
    run = png.evolve_two_type(png.nucleations_from(c), h)
    return {"scp": x / h, "dual": xd / h, "phi": run.interface.phi_at(h) / h}


def _lln_evaluate(spec, obs):
    params = spec.params
    tol = spec.option("tol", 0.1)
    v = 1.0 / params.lam ** 2
    w = hydro.stationary_interface_slope(params)
    n = len(obs)
    est = {k: _mean([o[k] for o in obs]) for k in ("scp", "dual", "phi")}
    ref = {"speed": v, "interface_slope": w}
    return est, ref, [
        Verdict.within("mean X_t/t", est["scp"], v - tol, v + tol, n),
        Verdict.within("mean dual X_t/t", est["dual"], v - tol, v + tol, n),
        Verdict.within("mean phi(s)/s", est["phi"], w - tol, w + tol, n),
    ]


# --------------------------------------------------------- interface_slope

def _slope_observe(spec, i):
    h = spec.horizon
    c = _config(spec, i, (SQRT2 * h, SQRT2 * h))
    run = png.evolve_two_type(png.nucleations_from(c), h)
    return {"phi": run.interface.phi_at(h) / h, "collisions": len(run.interface)}


def _slope_evaluate(spec, obs):
    lo, hi = hydro.interface_slope_bounds(spec.params)
    eps = spec.option("tol", 0.1)
    need = spec.option("min_fraction", 0.95)
    phi = np.array([o["phi"] for o in obs])
    frac = float(np.mean((phi >= lo - eps) & (phi <= hi + eps)))
    est = {"mean_phi": _mean(phi), "fraction_inside": frac}
    ref = {"bounds": [lo, hi], "tolerance": eps}
    return est, ref, [Verdict.within("fraction of phi(s)/s inside bounds", frac, need, 1.0, phi.size)]


# ------------------------------------------------------- shape and fluctuations

def _passage_observe(spec, i, fracs):
    scales = _scales(spec, fracs)
    top = max(scales)
    c = _config(spec, i, (top, top))
    return {"t": scales, "L": [lpp.last_passage(c, (0.0, 0.0), (s, s)) for s in scales]}


def _shape_observe(spec, i):
    return _passage_observe(spec, i, (0.5, 1.0))


def _shape_evaluate(spec, obs):
    t = np.array(obs[0]["t"])
    L = np.array([o["L"] for o in obs], dtype=float)
    ratio = (L / (2 * t)).mean(axis=0)
    n = L.shape[0]
    lo, hi = spec.option("band", [0.9, 1.0])
    sd = L.std(axis=0, ddof=1).tolist() if n > 1 else None
    est = {"t": t.tolist(), "mean_ratio": ratio.tolist(), "sd_L": sd}
    ref = {"shape": [hydro.shape_alpha(s, s) for s in t]}
    verdicts = [Verdict.within(f"mean L/(2t) at t={t[0]:g}", ratio[0], lo, hi, n)]
    for k in range(1, t.size):
        gain = float(ratio[k] - ratio[k - 1])
        verdicts.append(Verdict(f"ratio increase t={t[k - 1]:g}->{t[k]:g}", gain, 0.0, math.inf,
                                gain > 0, n, "strictly positive"))
    return est, ref, verdicts


def _chi_observe(spec, i):
    return _passage_observe(spec, i, (0.125, 0.25, 0.5, 1.0))


def _exponent_verdict(name, scales, samples, lo, hi, n):
    if n < 2:
        return {"scales": list(map(float, scales))}, Verdict(name, math.nan, lo, hi, False, n,
                                                             "needs at least two replicas")
    sd = np.std(samples, axis=0, ddof=1)
    slope, err = fit_exponent(scales, sd)
    est = {"scales": list(map(float, scales)), "sd": sd.tolist(), "slope": slope, "stderr": err}
    return est, Verdict.within(name, slope, lo, hi, n, f"stderr {err:.3f}")


def _chi_evaluate(spec, obs):
    t = np.array(obs[0]["t"])
    L = np.array([o["L"] for o in obs], dtype=float)
    lo, hi = spec.option("band", [0.23, 0.43])
    est, v = _exponent_verdict("chi exponent", t, L, lo, hi, L.shape[0])
    est["mean_L"] = L.mean(axis=0).tolist()
    return est, {"target": 1 / 3}, [v]


def _xi_observe(spec, i):
    scales = _scales(spec, (0.125, 0.25, 0.5, 1.0))
    h = max(scales)
    v = _speed(spec)
    c = _config(spec, i, (2.0 * v * h, h))
    scp = second_class(c, h)
    return {"t": scales, "X": [scp.position_at(s) for s in scales]}


def _xi_evaluate(spec, obs):
    t = np.array(obs[0]["t"])
    X = np.array([o["X"] for o in obs], dtype=float)
    lo, hi = spec.option("band", [0.5, 0.8])
    est, v = _exponent_verdict("xi exponent", t, X - t / spec.lam ** 2, lo, hi, X.shape[0])
    est["mean_X_over_t"] = (X / t).mean(axis=0).tolist()
    return est, {"target": 2 / 3}, [v]


# ------------------------------------------------------------ beta_poisson

def _grid(spec):
    h = spec.horizon
    m = spec.option("margin", 0.1)
    nb = spec.option("boxes", 8)
    return BoxGrid(m * h, (1 - m) * h, m * h, (1 - m) * h, nb, nb)


def _beta_observe(spec, i):
    h = spec.horizon
    c = _config(spec, i, (h, h))
    bx, bt, _ = lpp.level_decomposition(c).all_beta_points()
    return {"counts": _grid(spec).counts(np.column_stack([bx, bt])).tolist()}


def _beta_evaluate(spec, obs):
    grid = _grid(spec)
    counts = np.array([o["counts"] for o in obs])
    intensity, index = dispersion_stats(counts, grid.box_area)
    tol = spec.option("tol", 0.1)
    lo, hi = spec.option("index_band", [0.85, 1.15])
    n = counts.shape[0]
    est = {"intensity": intensity, "dispersion_index": index, "boxes": grid.n_boxes}
    return est, {"intensity": 1.0, "dispersion_index": 1.0}, [
        Verdict.within("beta-point intensity", intensity, 1 - tol, 1 + tol, n),
        Verdict.within("dispersion index", index, lo, hi, n),
    ]


# --------------------------------------------------------- density_profile

def _fan_bins(spec):
    if spec.params.regime != "rarefaction" or spec.lam == 0:
        raise ValueError("density profile needs 0 < lambda * rho < 1 and lambda > 0")
    lo, hi = hydro.fan_slopes(spec.params)
    return np.linspace(lo, hi, spec.option("bins", 30) + 1)


def _density_observe(spec, i):
    h = spec.horizon
    edges = _fan_bins(spec)
    # in-window particle positions do not depend on the window width
    c = _config(spec, i, (edges[-1] * h * 1.05, h))
    pos = positions_at_time(c, h)
    hist, _ = np.histogram(pos / h, bins=edges)
    return {"hist": hist.tolist()}


def _density_evaluate(spec, obs):
    edges = _fan_bins(spec)
    w = np.diff(edges)
    hist = np.array([o["hist"] for o in obs], dtype=float)
    emp = hist.sum(axis=0) / (hist.shape[0] * spec.horizon * w)
    # inside the fan u(r, 1) = r^(-1/2), so each bin average is exact
    exact = 2 * (np.sqrt(edges[1:]) - np.sqrt(edges[:-1])) / w
    l1 = float(np.sum(np.abs(emp - exact) * w))
    tol = spec.option("tol", 0.1)
    est = {"edges": edges.tolist(), "density": emp.tolist(), "l1": l1}
    return est, {"density": exact.tolist()}, [Verdict.within("L1 density error", l1, 0.0, tol, hist.shape[0])]


# ------------------------------------------------------------ angle_bounds

def _angle_observe(spec, i):
    h = spec.horizon
    xf = spec.option("x_factor", 2.0)
    c = _config(spec, i, (xf * h, h))
    d = lpp.level_decomposition(c)
    rng = stream_rng(spec.seed, i, STREAM_AUX)
    ratios = []
    for _ in range(spec.option("paths", 20)):
        path = lpp.enumerate_beta_path(d, "uniform", rng)
        if len(path):
            px, pt = path.points[-1]
            ratios.append(float(pt / px))
    return {"ratios": ratios}


def _angle_evaluate(spec, obs):
    r = np.concatenate([o["ratios"] for o in obs])
    lam, rho = spec.lam, spec.rho
    eps = spec.option("tol", 0.05)
    lo = lam ** 2 - eps
    hi = (1.0 / rho ** 2 if rho > 0 else math.inf) + eps
    frac = float(np.mean((r >= lo) & (r <= hi)))
    est = {"fraction_inside": frac, "min_ratio": float(r.min()), "max_ratio": float(r.max()),
           "mean_ratio": _mean(r), "paths": int(r.size)}
    return est, {"bounds": [lam ** 2, hi - eps]}, [
        Verdict.within("terminal t/x inside angle bounds", frac, 1.0, 1.0, len(obs),
                       f"range [{r.min():.3f}, {r.max():.3f}]")]


# -------------------------------------------------------------- tail_check

def _tail_observe(spec, i):
    h = spec.horizon
    c = _config(spec, i, (h, h))
    return {"L": lpp.last_passage(c, (0.0, 0.0), (h, h))}


def _tail_evaluate(spec, obs):
    h = spec.horizon
    L = np.array([o["L"] for o in obs], dtype=float)
    k = spec.option("width", 6.0)
    cap = spec.option("max_fraction", 0.02)
    frac = float(np.mean(np.abs(L - 2 * h) > k * h ** (1 / 3)))
    est = {"exceed_fraction": frac, "mean_L": _mean(L), "sd_L": float(L.std(ddof=1)) if L.size > 1 else None}
    verdict = Verdict("tail exceedance fraction", frac, 0.0, cap, frac < cap, L.size, "strict upper bound")
    return est, {"threshold": k * h ** (1 / 3)}, [verdict]


# ------------------------------------------------------ delta_straightness

def _delta_observe(spec, i):
    h = spec.horizon
    c = _config(spec, i, (h, h))
    pairs = delta_straightness_stat(c, tuple(spec.option("levels", [1, 10 ** 9])),
                                    spec.option("delta", 0.25), spec.option("points", 20),
                                    stream_rng(spec.seed, i, STREAM_AUX))
    return {"pairs": [list(p) for p in pairs]}


def _delta_evaluate(spec, obs):
    pairs = np.array([p for o in obs for p in o["pairs"]]).reshape(-1, 2)
    if pairs.shape[0] == 0:
        return {"pairs": 0}, {}, []
    edges = np.quantile(pairs[:, 0], np.linspace(0, 1, 6))
    idx = np.clip(np.searchsorted(edges, pairs[:, 0], side="right") - 1, 0, 4)
    med = [float(np.median(pairs[idx == k, 1])) if np.any(idx == k) else float("nan") for k in range(5)]
    est = {"pairs": int(pairs.shape[0]), "norm_edges": edges.tolist(), "median_max_angle": med,
           "envelope_nonincreasing": bool(np.all(np.diff([m for m in med if m == m]) <= 0))}
    return est, {"delta": spec.option("delta", 0.25)}, []


EXPERIMENTS = {
    "cdf_scp": Experiment(dict(lam=0.5, rho=1.0, horizon=500.0, replicas=1000), _cdf_observe,
                          _cdf_evaluate, "second-class particle X_t/t against the limit CDF"),
    "lln_stationary": Experiment(dict(lam=1.0, rho=1.0, horizon=500.0, replicas=200), _lln_observe,
                                 _lln_evaluate, "stationary speeds of both second-class particles and the interface"),
    "interface_slope": Experiment(dict(lam=0.5, rho=1.0, horizon=200.0, replicas=100), _slope_observe,
                                  _slope_evaluate, "competition-interface slope against its asymptotic range"),
    "shape_check": Experiment(dict(lam=0.0, rho=0.0, horizon=200.0, replicas=100), _shape_observe,
                              _shape_evaluate, "mean L(0,(t,t))/(2t) and its growth with t"),
    "fluct_chi": Experiment(dict(lam=0.0, rho=0.0, horizon=400.0, replicas=300), _chi_observe,
                            _chi_evaluate, "longitudinal fluctuation exponent"),
    "fluct_xi": Experiment(dict(lam=1.0, rho=1.0, horizon=400.0, replicas=300), _xi_observe,
                           _xi_evaluate, "transversal fluctuation exponent of the second-class particle"),
    "beta_poisson": Experiment(dict(lam=1.0, rho=1.0, horizon=200.0, replicas=100), _beta_observe,
                               _beta_evaluate, "beta-point box counts in the stationary regime"),
    "density_profile": Experiment(dict(lam=0.5, rho=1.0, horizon=500.0, replicas=40), _density_observe,
                                  _density_evaluate, "particle density over the rarefaction fan"),
    "angle_bounds": Experiment(dict(lam=0.5, rho=1.0, horizon=400.0, replicas=100), _angle_observe,
                               _angle_evaluate, "terminal directions of random beta-paths"),
    "tail_check": Experiment(dict(lam=0.0, rho=0.0, horizon=200.0, replicas=1000), _tail_observe,
                             _tail_evaluate, "large deviations of L(0,(t,t)) from 2t"),
    "delta_straightness": Experiment(dict(lam=0.0, rho=0.0, horizon=200.0, replicas=20), _delta_observe,
                                     _delta_evaluate, "max angle over R_out(P) against |P|"),
}


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(f"{v:.10g}" if isinstance(v, float) else str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def artifacts(record) -> dict:
    """Derived tables and figures for a finished record, keyed by file name."""
    spec, est, ref = record.spec, record.estimates, record.references
    out = {}
    if not est:
        return out
    name = spec.experiment
    if name == "cdf_scp":
        r = [o["r"] for o in record.observables]
        params = spec.params
        out["cdf.svg"] = svgplot.ecdf_overlay(r, lambda v: hydro.z_cdf(v, params))
        out["samples.csv"] = _csv(["replica", "r"], [(k, v) for k, v in enumerate(r)])
    elif name in ("fluct_chi", "fluct_xi") and "sd" in est:
        out["dispersion.svg"] = svgplot.loglog_fit(est["scales"], est["sd"], est["slope"], title=name)
        out["dispersion.csv"] = _csv(["scale", "sd"], zip(est["scales"], est["sd"]))
    elif name == "density_profile":
        e = np.array(est["edges"])
        mid = ((e[1:] + e[:-1]) / 2).tolist()
        out["density.svg"] = svgplot.plot([("empirical", mid, est["density"], "dots"),
                                           ("entropy solution", mid, ref["density"], "line")],
                                          title="density at t=1", xlabel="x/t", ylabel="u")
        out["density.csv"] = _csv(["r", "empirical", "exact"], zip(mid, est["density"], ref["density"]))
    elif name == "shape_check":
        out["shape.csv"] = _csv(["t", "mean_L_over_2t"], zip(est["t"], est["mean_ratio"]))
    elif name == "delta_straightness":
        pairs = [p for o in record.observables for p in o["pairs"]]
        if pairs:
            arr = np.array(pairs)
            out["straightness.svg"] = svgplot.plot([("max ang over R_out", arr[:, 0], arr[:, 1], "dots")],
                                                   title="delta-straightness", xlabel="|P|",
                                                   ylabel="angle", logx=True, logy=True)
            out["straightness.csv"] = _csv(["norm", "max_angle"], pairs)
    return out


def default_spec(experiment: str, **overrides):
    from .harness import ExperimentSpec

    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    fields = dict(EXPERIMENTS[experiment].defaults)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentSpec(experiment=experiment, **fields)
