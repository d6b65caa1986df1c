import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnglab import lpp, png
from pnglab.pointfield import SQRT2, PointConfig, sample_config

PARAMS = [(1, 1), (0.5, 1), (0, 0), (2, 0.5), (1, 0)]
seeds = st.integers(0, 2**32 - 1)


def test_boundary_nucleations():
    nuc = png.nucleations_from(PointConfig.from_points(sources=[1.0], sinks=[1.0], window=(2, 2)))
    assert set(nuc.origin.tolist()) == {png.ORIGIN_PLUS, png.ORIGIN_MINUS}
    plus = nuc.origin == png.ORIGIN_PLUS
    assert nuc.z[plus][0] == pytest.approx(1 / SQRT2) and nuc.s[plus][0] == pytest.approx(1 / SQRT2)
    assert nuc.z[~plus][0] == pytest.approx(-1 / SQRT2) and nuc.s[~plus][0] == pytest.approx(1 / SQRT2)


def test_nucleations_sorted_by_time():
    nuc = png.nucleations_from(sample_config(1, 1, (10, 10), seed=0))
    assert np.all(np.diff(nuc.s) >= 0)


def test_single_island_spreads_at_unit_speed():
    s0 = 1.0
    c = PointConfig.from_points([(s0 / SQRT2, s0 / SQRT2)], window=(8, 8))
    prof = png.evolve_png(png.nucleations_from(c), 5.0)
    for s in (0.5, 2.0, 4.9):
        zs = np.linspace(-s, s, 201)
        h = prof.height(zs, np.full(zs.size, s))
        expected = (np.abs(zs) <= s - s0 - 1e-9).astype(int)
        edge = np.abs(np.abs(zs) - (s - s0)) < 1e-9
        assert np.array_equal(h[~edge], expected[~edge])


def test_no_nucleations_is_flat():
    prof = png.evolve_png(png.nucleations_from(PointConfig.from_points(window=(4, 4))), 2.0)
    zs = np.linspace(-2, 2, 11)
    assert not prof.height(zs, np.full(11, 2.0)).any()


def test_query_beyond_horizon_rejected():
    prof = png.evolve_png(png.nucleations_from(sample_config(1, 1, (4, 4), seed=0)), 2.0)
    with pytest.raises(ValueError):
        prof.height_xt([3.0], [3.0])
    with pytest.raises(ValueError):
        png.evolve_png(png.nucleations_from(sample_config(1, 1, (4, 4), seed=0)), 0.0)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from(PARAMS))
def test_height_equals_last_passage(seed, params):
    side = 30.0
    c = sample_config(*params, (side, side), seed=seed)
    d = lpp.level_decomposition(c)
    nuc = png.nucleations_from(c)
    single = png.evolve_png(nuc, side / SQRT2)
    two = png.evolve_two_type(nuc, side / SQRT2)
    rng = np.random.default_rng(seed)
    q = rng.uniform(0, side, (200, 2))
    q = q[q.sum(axis=1) <= side]
    ref = np.array([d.height(p) for p in q])
    assert np.array_equal(single.height_xt(q[:, 0], q[:, 1]), ref)
    assert np.array_equal(two.profile.height_xt(q[:, 0], q[:, 1]), ref)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from(PARAMS))
def test_interface_is_beta_path(seed, params):
    side = 30.0
    c = sample_config(*params, (side, side), seed=seed)
    run = png.evolve_two_type(png.nucleations_from(c), side / SQRT2)
    tr = run.interface
    assert tr.phi[0] == 0 and tr.sigma[0] == 0
    assert np.array_equal(tr.levels, np.arange(len(tr) + 1))
    assert np.all(np.diff(tr.sigma) > 0)
    lpp.validate_beta_path(lpp.level_decomposition(c), tr.points_xt[1:])
    assert png.types_separated(run)


def test_interface_step_function():
    run = png.evolve_two_type(png.nucleations_from(sample_config(1, 1, (30, 30), seed=4)), 30 / SQRT2)
    tr = run.interface
    assert len(tr) > 2
    assert tr.phi_at(tr.sigma[1] * 0.999) == 0.0
    assert tr.phi_at(tr.sigma[1]) == tr.phi[1]
    assert tr.phi_at(0.5 * (tr.sigma[2] + tr.sigma[3])) == tr.phi[2]
    with pytest.raises(ValueError):
        tr.phi_at(tr.horizon + 1)


def test_profile_unpacks():
    prof, trace = png.evolve_two_type(png.nucleations_from(sample_config(1, 1, (6, 6), seed=1)), 3.0)
    assert isinstance(prof, png.HeightProfile) and isinstance(trace, png.InterfaceTrace)


def test_height_profile_invariants():
    c = sample_config(0.5, 1, (20, 20), seed=9)
    prof = png.evolve_png(png.nucleations_from(c), 20 / SQRT2)
    zs = np.linspace(-5, 5, 81)
    assert not prof.height(zs, np.zeros_like(zs)).any()
    prev = None
    for s in np.linspace(0, prof.horizon, 30):
        h = prof.height(zs, np.full(zs.size, s))
        assert h.min() >= 0
        if prev is not None:
            assert np.all(h >= prev)
        prev = h


def test_fine_grid_steps_are_unit():
    c = sample_config(1, 1, (12, 12), seed=2)
    prof = png.evolve_png(png.nucleations_from(c), 12 / SQRT2)
    s = 8.0
    zs = np.linspace(-s, s, 20001)
    h = prof.height(zs, np.full(zs.size, s))
    assert np.abs(np.diff(h)).max() == 1


def test_exports():
    run = png.evolve_two_type(png.nucleations_from(sample_config(1, 1, (10, 10), seed=3)), 10 / SQRT2)
    rows = run.profile.grid_rows(nz=5, ns=3)
    assert len(rows) == 15 and rows[0][2] == 0
    svg = png.layer_svg(run.profile, run.interface)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    layers = png.surface_layers(run)
    assert layers[0][0] == 0.0 and layers[-1][1] == pytest.approx(run.profile.u_stop)
