import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnglab.pointfield import (
    SQRT2,
    PlanarPoint,
    PointConfig,
    RotatedPoint,
    rotate,
    rotate_array,
    sample_config,
    stream_rng,
    unrotate,
    unrotate_array,
)

coord = st.floats(0, 1e3, allow_nan=False)


def test_zero_intensity_has_no_boundary_points():
    c = sample_config(0, 0, (10, 10), seed=5)
    assert c.sources.size == 0 and c.sinks.size == 0
    assert c.bulk_x.size > 0


def test_bulk_count_within_five_sigma():
    side = 1000.0
    c = sample_config(1, 1, (side, side), seed=11)
    area = side * side
    assert abs(c.bulk_x.size - area) <= 5 * math.sqrt(area)
    assert abs(c.sources.size - side) <= 5 * math.sqrt(side)
    assert abs(c.sinks.size - side) <= 5 * math.sqrt(side)


def test_same_seed_same_config():
    a = sample_config(0.5, 2.0, (20, 15), seed=3, replica=4)
    b = sample_config(0.5, 2.0, (20, 15), seed=3, replica=4)
    assert a.same_as(b)
    assert a.bulk_x.tobytes() == b.bulk_x.tobytes()


def test_replicas_differ():
    a = sample_config(1, 1, (10, 10), seed=3, replica=0)
    b = sample_config(1, 1, (10, 10), seed=3, replica=1)
    assert not a.same_as(b)


def test_streams_are_independent_of_each_other():
    # changing rho must not touch the bulk or source draws
    a = sample_config(1, 1, (10, 10), seed=9)
    b = sample_config(1, 3, (10, 10), seed=9)
    assert np.array_equal(a.bulk_x, b.bulk_x) and np.array_equal(a.sources, b.sources)
    assert not np.array_equal(a.sinks, b.sinks)


def test_stream_rng_substreams_distinct():
    draws = {tuple(stream_rng(1, r, s).integers(0, 2**62, 4)) for r in range(5) for s in range(5)}
    assert len(draws) == 25


def test_config_invariants():
    c = sample_config(1.5, 0.7, (12, 9), seed=2)
    xm, tm = c.window
    assert np.all((c.bulk_x > 0) & (c.bulk_x < xm) & (c.bulk_t > 0) & (c.bulk_t < tm))
    assert np.all(np.diff(c.bulk_t) > 0)
    assert np.all(np.diff(c.sources) > 0) and np.all(np.diff(c.sinks) > 0)
    assert np.unique(np.concatenate([c.bulk_x, c.sources])).size == c.bulk_x.size + c.sources.size


@pytest.mark.parametrize("args", [(-1, 0, (1, 1)), (0, -0.1, (1, 1)), (1, 1, (0, 1)), (1, 1, (1, -2))])
def test_sample_rejects_bad_input(args):
    with pytest.raises(ValueError):
        sample_config(*args, seed=0)


def test_from_points_rejects_duplicates_and_outside():
    with pytest.raises(ValueError):
        PointConfig.from_points([(1, 1), (1, 2)])
    with pytest.raises(ValueError):
        PointConfig.from_points([(1, 1)], window=(1, 2))
    with pytest.raises(ValueError):
        PointConfig.from_points(sources=[0.0])


def test_json_round_trip(tmp_path):
    c = sample_config(0.5, 1, (8, 8), seed=21)
    path = tmp_path / "c.json"
    c.to_json(path)
    assert PointConfig.from_json(path).same_as(c)
    assert PointConfig.from_json(c.to_json()).same_as(c)
    doc = c.to_dict()
    assert {"lambda", "rho", "window", "seed"} <= set(doc)
    del doc["sinks"]
    with pytest.raises(ValueError):
        PointConfig.from_dict(doc)


def test_transpose_swaps_boundaries():
    c = sample_config(0.5, 2, (8, 5), seed=4)
    tc = c.transpose()
    assert tc.window == (5, 8)
    assert np.array_equal(tc.sources, c.sinks) and np.array_equal(tc.sinks, c.sources)
    assert (tc.lam, tc.rho) == (c.rho, c.lam)
    assert tc.transpose().same_as(c)


def test_chain_order_sorted():
    c = sample_config(1, 1, (10, 10), seed=8)
    x, t, _ = c.chain_order
    assert x.size == c.n_points
    key = np.lexsort((x, t))
    assert np.array_equal(key, np.arange(x.size))


def test_rotation_axis_images():
    r = rotate((1, 0))
    assert r.z == pytest.approx(1 / SQRT2) and r.s == pytest.approx(1 / SQRT2)
    r = rotate((0, 1))
    assert r.z == pytest.approx(-1 / SQRT2) and r.s == pytest.approx(1 / SQRT2)
    r = rotate(PlanarPoint(1, 1))
    assert r.z == pytest.approx(0, abs=1e-15) and r.s == pytest.approx(SQRT2)


def test_unrotate_examples():
    p = unrotate(RotatedPoint(0.0, SQRT2))
    assert p.x == pytest.approx(1) and p.t == pytest.approx(1)
    p = unrotate((1 / SQRT2, 1 / SQRT2))
    assert p.x == pytest.approx(1) and p.t == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        unrotate((2.0, 1.0))


def test_point_types_reject_negative():
    with pytest.raises(ValueError):
        PlanarPoint(-1, 0)
    with pytest.raises(ValueError):
        RotatedPoint(0, -1)


def test_round_trip_many_points():
    rng = np.random.default_rng(0)
    x, t = rng.uniform(0, 100, (2, 10_000))
    z, s = rotate_array(x, t)
    x2, t2 = unrotate_array(z, s)
    assert max(np.abs(x2 - x).max(), np.abs(t2 - t).max()) < 1e-12


def test_rotation_preserves_bulk_intensity():
    side = 200.0
    c = sample_config(0, 0, (side, side), seed=1)
    z, s = rotate_array(c.bulk_x, c.bulk_t)
    # diamond |z| <= s, s <= side/sqrt2 has area side^2 / 2
    inside = s <= side / SQRT2
    area = side * side / 2
    assert abs(inside.sum() - area) <= 5 * math.sqrt(area)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord)
def test_rotation_is_isometry(x1, t1, x2, t2):
    a, b = rotate((x1, t1)), rotate((x2, t2))
    d0 = math.hypot(x1 - x2, t1 - t2)
    d1 = math.hypot(a.z - b.z, a.s - b.s)
    assert abs(d0 - d1) <= 1e-12 * max(1.0, d0)


@settings(max_examples=200, deadline=None)
@given(coord, coord)
def test_rotate_lands_in_light_cone(x, t):
    r = rotate((x, t))
    assert abs(r.z) <= r.s + 1e-12
