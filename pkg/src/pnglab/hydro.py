"""Closed-form macroscopic laws for the boundary-driven models."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pointfield import SQRT2

_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    lam: float
    rho: float

    def __post_init__(self):
        if not (self.lam >= 0 and self.rho >= 0):
            raise ValueError("intensities must be nonnegative")

    @property
    def product(self) -> float:
        return self.lam * self.rho

    @property
    def regime(self) -> str:
        if abs(self.product - 1.0) <= _TOL:
            return "stationary"
        return "rarefaction" if self.product < 1.0 else "shock"


def shape_alpha(x: float, t: float) -> float:
    if x < 0 or t < 0:
        raise ValueError("shape function needs x, t >= 0")
    return 2.0 * math.sqrt(x * t)


def growth_velocity(u: float) -> float:
    return math.sqrt(2.0 + u * u)


def growth_velocity_prime(u: float) -> float:
    return u / math.sqrt(2.0 + u * u)


def limit_shape_f(c: float) -> float:
    """Rescaled droplet height ``h(cs, s)/s`` with no boundary sources."""
    if abs(c) > 1:
        raise ValueError("|c| must be at most 1")
    return math.sqrt(2.0 * (1.0 - c * c))


def burgers_u(x: float, t: float, params: ModelParams) -> float:
    """Entropy solution of ``u_t + (1/u)_x = 0`` with data ``lambda`` then ``1/rho``.

    In the stationary case the solution is the constant ``lambda``.
    """
    if not (x > 0 and t > 0):
        raise ValueError("burgers_u needs x > 0 and t > 0")
    regime = params.regime
    if regime == "shock":
        raise ValueError("shock regime (lambda * rho > 1) is not covered")
    lam, rho = params.lam, params.rho
    if regime == "stationary":
        return lam
    if rho > 0 and t >= x / (rho * rho):
        return 1.0 / rho
    if t >= lam * lam * x:
        return math.sqrt(t / x)
    return lam


def burgers_u_array(x, t, params: ModelParams) -> np.ndarray:
    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
    return np.array([burgers_u(a, b, params) for a, b in zip(x.ravel(), t.ravel())]).reshape(x.shape)


def characteristic(a: float, t: float, params: ModelParams) -> float:
    """Straight characteristic ``x = a + t / lambda^2`` of the stationary solution."""
    if params.regime != "stationary":
        raise ValueError("characteristics from a point exist only for lambda * rho = 1")
    if a < 0:
        raise ValueError("a must be nonnegative")
    return a + t / (params.lam * params.lam)


def fan_slopes(params: ModelParams) -> tuple[float, float]:
    """Range ``[rho^2, lambda^-2]`` of x/t slopes of the rarefaction fan."""
    hi = math.inf if params.lam == 0 else 1.0 / (params.lam * params.lam)
    return params.rho ** 2, hi


def z_cdf(r: float, params: ModelParams) -> float:
    """Limit law of ``X_t / t`` for the second-class particle."""
    lam, rho = params.lam, params.rho
    if rho <= 0:
        raise ValueError("rho must be positive")
    if params.regime != "rarefaction":
        raise ValueError("z_cdf needs lambda * rho < 1")
    lo, hi = fan_slopes(params)
    if r <= lo:
        return 0.0
    if r > hi:
        return 1.0
    return (1.0 / rho - 1.0 / math.sqrt(r)) / (1.0 / rho - lam)


def z_quantile(p: float, params: ModelParams) -> float:
    """Inverse of :func:`z_cdf` on ``(0, 1)``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if params.rho <= 0 or params.regime != "rarefaction":
        raise ValueError("z_quantile needs rho > 0 and lambda * rho < 1")
    rinv = 1.0 / params.rho - p * (1.0 / params.rho - params.lam)
    return 1.0 / (rinv * rinv)


def stationary_interface_slope(params: ModelParams) -> float:
    if params.regime != "stationary":
        raise ValueError("stationary slope needs lambda * rho = 1")
    lam2 = params.lam ** 2
    return (1.0 - lam2) / (1.0 + lam2)


def interface_slope_bounds(params: ModelParams) -> tuple[float, float]:
    """Asymptotic range of ``phi(s)/s`` when ``lambda * rho <= 1``."""
    if params.regime == "shock":
        raise ValueError("bounds hold only for lambda * rho <= 1")
    r2, l2 = params.rho ** 2, params.lam ** 2
    return (r2 - 1.0) / (r2 + 1.0), (1.0 - l2) / (1.0 + l2)


def stationary_height(z: float, s: float, params: ModelParams) -> float:
    """Macroscopic stationary height ``s v(u) + z u`` with ``u = (rho - lambda)/sqrt(2)``."""
    if params.regime != "stationary":
        raise ValueError("stationary profile needs lambda * rho = 1")
    u = (params.rho - params.lam) / SQRT2
    return s * growth_velocity(u) + z * u


def tabulate_cdf(params: ModelParams, n: int = 201):
    lo, hi = fan_slopes(params)
    top = hi if math.isfinite(hi) else 4 * max(lo, 1.0)
    rs = np.linspace(0.0, top * 1.25, n)
    rs = np.union1d(rs, [lo, top])
    return [(float(r), z_cdf(float(r), params)) for r in rs]


def tabulate_shape(n: int = 201):
    return [(float(c), limit_shape_f(float(c))) for c in np.linspace(-1.0, 1.0, n)]


def tabulate_burgers(params: ModelParams, t: float = 1.0, n: int = 201, x_max: float | None = None):
    lo, hi = fan_slopes(params)
    if x_max is None:
        x_max = 1.25 * (hi if math.isfinite(hi) else 4 * max(lo, 1.0)) * t
    xs = np.linspace(x_max / n, x_max, n)
    return [(float(x), burgers_u(float(x), t, params)) for x in xs]
