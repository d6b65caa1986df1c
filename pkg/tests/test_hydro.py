import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnglab import hydro
from pnglab.hydro import ModelParams
from pnglab.pointfield import rotate

FAN = ModelParams(0.5, 1.0)
pos = st.floats(1e-3, 1e3)


def test_regimes():
    assert ModelParams(1, 1).regime == "stationary"
    assert ModelParams(2, 0.5).regime == "stationary"
    assert FAN.regime == "rarefaction"
    assert ModelParams(2, 1).regime == "shock"
    with pytest.raises(ValueError):
        ModelParams(-1, 1)


def test_shape_alpha():
    assert hydro.shape_alpha(1, 1) == 2
    assert hydro.shape_alpha(4, 1) == 4
    with pytest.raises(ValueError):
        hydro.shape_alpha(-1, 1)


@settings(max_examples=200, deadline=None)
@given(pos, pos, st.floats(0, 100))
def test_shape_homogeneous(x, t, a):
    assert hydro.shape_alpha(a * x, a * t) == pytest.approx(a * hydro.shape_alpha(x, t), rel=1e-12, abs=1e-12)


def test_growth_velocity():
    assert hydro.growth_velocity(0) == math.sqrt(2)
    for lam in (0.25, 0.5, 1.0, 2.0, 3.0):
        u = (1 / lam - lam) / math.sqrt(2)
        want = (1 - lam**2) / (1 + lam**2)
        assert hydro.growth_velocity_prime(u) == pytest.approx(want, abs=1e-14)


def test_growth_velocity_prime_finite_difference():
    h = 1e-5
    for u in np.linspace(-5, 5, 41):
        fd = (hydro.growth_velocity(u + h) - hydro.growth_velocity(u - h)) / (2 * h)
        assert abs(fd - hydro.growth_velocity_prime(u)) < 1e-8


def test_limit_shape():
    assert hydro.limit_shape_f(0) == math.sqrt(2)
    assert hydro.limit_shape_f(1) == 0 and hydro.limit_shape_f(-1) == 0
    with pytest.raises(ValueError):
        hydro.limit_shape_f(1.01)


def test_rotation_shape_identity():
    rng = np.random.default_rng(0)
    for x, t in rng.uniform(0, 100, (2000, 2)):
        z, s = rotate((x, t))
        assert abs(hydro.shape_alpha(x, t) - math.sqrt(2 * (s * s - z * z))) < 1e-10
        assert abs(hydro.shape_alpha(x, t) - s * hydro.limit_shape_f(z / s)) < 1e-10


def test_burgers_branches():
    assert hydro.burgers_u(1, 2, FAN) == 1
    assert hydro.burgers_u(4, 1, FAN) == 0.5
    assert hydro.burgers_u(2, 1, FAN) == pytest.approx(math.sqrt(0.5))
    assert hydro.burgers_u(10, 1, FAN) == 0.5


def test_burgers_continuity():
    for params in (FAN, ModelParams(0.2, 3.0), ModelParams(0.0, 1.5)):
        lo, hi = hydro.fan_slopes(params)
        for edge in (lo, hi):
            if not math.isfinite(edge):
                continue
            a = hydro.burgers_u(edge * (1 - 1e-12), 1.0, params)
            b = hydro.burgers_u(edge * (1 + 1e-12), 1.0, params)
            assert abs(a - b) < 1e-10


def test_burgers_regimes():
    assert hydro.burgers_u(3, 1, ModelParams(2, 0.5)) == 2
    with pytest.raises(ValueError):
        hydro.burgers_u(1, 1, ModelParams(2, 1))
    with pytest.raises(ValueError):
        hydro.burgers_u(0, 1, FAN)


def test_characteristics():
    assert hydro.characteristic(0, 5, ModelParams(1, 1)) == 5
    assert hydro.characteristic(1, 4, ModelParams(2, 0.5)) == 2
    with pytest.raises(ValueError):
        hydro.characteristic(0, 1, FAN)


def test_characteristic_slope_is_flux_derivative():
    h = 1e-6
    for lam in (0.5, 1.0, 2.0):
        params = ModelParams(lam, 1 / lam)
        fd = abs((1 / (lam + h) - 1 / (lam - h)) / (2 * h))
        slope = hydro.characteristic(0, 1, params) - hydro.characteristic(0, 0, params)
        assert slope == pytest.approx(fd, rel=1e-8)


def test_z_cdf_examples():
    assert hydro.z_cdf(1, FAN) == 0
    assert hydro.z_cdf(4, FAN) == 1
    assert hydro.z_cdf(2, FAN) == pytest.approx((1 - 1 / math.sqrt(2)) / 0.5)
    assert hydro.z_cdf(2, FAN) == pytest.approx(0.5858, abs=1e-4)
    assert hydro.z_cdf(0.3, FAN) == 0 and hydro.z_cdf(9, FAN) == 1


def test_z_cdf_rejections():
    with pytest.raises(ValueError):
        hydro.z_cdf(1, ModelParams(0.5, 0))
    with pytest.raises(ValueError):
        hydro.z_cdf(1, ModelParams(1, 1))


def test_z_cdf_lambda_zero_branch():
    params = ModelParams(0, 1)
    assert hydro.fan_slopes(params) == (1, math.inf)
    assert hydro.z_cdf(1e8, params) == pytest.approx(1 - 1e-4)
    assert hydro.z_cdf(4, params) == pytest.approx(0.5)


def test_z_cdf_monotone_and_quantile():
    rs = np.linspace(0, 6, 3001)
    vals = np.array([hydro.z_cdf(r, FAN) for r in rs])
    assert np.all(np.diff(vals) >= 0)
    for p in np.linspace(0.01, 0.99, 50):
        assert hydro.z_cdf(hydro.z_quantile(p, FAN), FAN) == pytest.approx(p, abs=1e-12)


def test_cdf_burgers_link():
    for params in (FAN, ModelParams(0.3, 1.7), ModelParams(0, 1)):
        lo, hi = hydro.fan_slopes(params)
        top = hi if math.isfinite(hi) else 50.0
        for r in np.linspace(lo, top, 1000)[1:]:
            u = hydro.burgers_u(r, 1.0, params)
            link = (1 / params.rho - u) / (1 / params.rho - params.lam)
            assert abs(hydro.z_cdf(r, params) - link) < 1e-12


def test_support_matches_angle_bounds():
    lo, hi = hydro.fan_slopes(FAN)
    assert (1 / hi, 1 / lo) == (FAN.lam**2, FAN.rho**-2)


def test_stationary_interface_slope():
    assert hydro.stationary_interface_slope(ModelParams(1, 1)) == 0
    assert hydro.stationary_interface_slope(ModelParams(0.5, 2)) == pytest.approx(0.6)
    for lam in (0.3, 0.5, 1.5):
        params = ModelParams(lam, 1 / lam)
        u = (params.rho - params.lam) / math.sqrt(2)
        assert hydro.stationary_interface_slope(params) == pytest.approx(hydro.growth_velocity_prime(u))
    with pytest.raises(ValueError):
        hydro.stationary_interface_slope(FAN)


def test_interface_slope_bounds():
    assert hydro.interface_slope_bounds(ModelParams(1, 1)) == (0, 0)
    lo, hi = hydro.interface_slope_bounds(ModelParams(0, 0))
    assert (lo, hi) == (-1, 1)
    with pytest.raises(ValueError):
        hydro.interface_slope_bounds(ModelParams(2, 2))


def test_stationary_height():
    params = ModelParams(0.5, 2)
    u = 1.5 / math.sqrt(2)
    assert hydro.stationary_height(3, 0, params) == pytest.approx(3 * u)
    assert hydro.stationary_height(0, 2, params) == pytest.approx(2 * hydro.growth_velocity(u))


def test_tabulations():
    cdf = dict(hydro.tabulate_cdf(FAN, 41))
    assert cdf[1.0] == 0 and cdf[4.0] == 1
    shape = hydro.tabulate_shape(5)
    assert shape[2] == (0.0, math.sqrt(2))
    burg = hydro.tabulate_burgers(FAN, n=10)
    assert len(burg) == 10 and burg[-1][1] == 0.5
