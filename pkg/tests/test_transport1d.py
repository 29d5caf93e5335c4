import math

import numpy as np
import pytest

from inwdt.transport1d import (
    IdentityMapping,
    KernelConfig,
    Mapping1D,
    eval_mapping,
    nw_map_1d,
    ot_map_1d,
)


# ---------------------------------------------------------------- Mapping1D

def test_mapping_returns_node_samples_exactly(rng):
    samples = rng.normal(0, 50, size=17)
    m = Mapping1D(-4.0, 12.0, samples)
    for k in range(17):
        assert m.evaluate(m.node(k)) == samples[k]


def test_mapping_midpoint_is_mean():
    m = Mapping1D(0.0, 3.0, np.array([0.0, 10.0, 14.0, -2.0]))
    assert m.evaluate(0.5) == pytest.approx(5.0, abs=1e-12)
    assert m.evaluate(1.5) == pytest.approx(12.0, abs=1e-12)


def test_identity_sampled_mapping_evaluates_to_input(rng):
    nodes = np.linspace(-7.0, 21.0, 257)
    m = Mapping1D(-7.0, 21.0, nodes)
    t = rng.uniform(-50, 60, size=1000)  # includes out-of-range points
    np.testing.assert_allclose(m.evaluate(t), t, rtol=0, atol=1e-11)
    assert m.evaluate(-7.0) == -7.0
    assert m.evaluate(21.0) == 21.0


def test_mapping_extends_linearly():
    m = Mapping1D(0.0, 2.0, np.array([0.0, 3.0, 6.0]))
    assert m.evaluate(5.0) == pytest.approx(15.0, abs=1e-12)
    assert m.evaluate(-2.0) == pytest.approx(-6.0, abs=1e-12)


def test_mapping_scalar_and_array_agree(rng):
    m = Mapping1D(0.0, 1.0, rng.normal(size=9))
    t = rng.uniform(-1, 2, size=40)
    arr = m.evaluate(t)
    for i, ti in enumerate(t):
        assert m.evaluate(float(ti)) == arr[i]


def test_mapping_validation():
    with pytest.raises(ValueError):
        Mapping1D(0.0, 1.0, np.array([1.0]))
    with pytest.raises(ValueError):
        Mapping1D(1.0, 1.0, np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        Mapping1D(0.0, 1.0, np.array([0.0, np.nan]))


def test_identity_mapping_seam(rng):
    ident = IdentityMapping()
    t = rng.normal(size=64)
    assert np.array_equal(ident.evaluate(t), t)
    assert ident.evaluate(3.25) == 3.25
    assert eval_mapping(ident, -1.5) == -1.5


# ------------------------------------------------------------- quantile map

def test_ot_identity_when_u_equals_v(rng):
    u = rng.normal(0, 30, size=200)
    m = ot_map_1d(u, u.copy())
    np.testing.assert_allclose(m.evaluate(u), u, rtol=0, atol=1e-9)


def test_ot_rank_pairing_small_example():
    u = np.array([3.0, 1.0, 2.0])
    v = np.array([30.0, 10.0, 20.0])
    # grid nodes land on the sorted u, so the pairing is exact
    m = ot_map_1d(u, v, grid_size=3)
    assert m.evaluate(1.0) == pytest.approx(10.0, abs=1e-9)
    assert m.evaluate(2.0) == pytest.approx(20.0, abs=1e-9)
    assert m.evaluate(3.0) == pytest.approx(30.0, abs=1e-9)
    # both marginals are equally spaced, so any grid gives the same line
    m2 = ot_map_1d(u, v)
    assert m2.evaluate(2.0) == pytest.approx(20.0, abs=1e-9)


def test_ot_shift_equivariance(rng):
    for trial in range(10):
        r = np.random.default_rng(trial)
        u = r.normal(0, r.uniform(1, 80), size=int(r.integers(2, 400)))
        c = r.uniform(-90, 90)
        m = ot_map_1d(u, u + c)
        nodes = m.grid_lo + np.arange(m.grid_size) * m.step
        np.testing.assert_allclose(m.samples, nodes + c, rtol=0, atol=1e-9)
        t = r.uniform(u.min(), u.max(), size=100)
        np.testing.assert_allclose(m.evaluate(t), t + c, rtol=0, atol=1e-9)


def test_ot_single_pair_is_constant():
    m = ot_map_1d(np.array([5.0]), np.array([42.0]))
    for t in (-100.0, 5.0, 93.5):
        assert m.evaluate(t) == 42.0


def test_ot_degenerate_u_maps_to_median():
    m = ot_map_1d(np.array([7.0, 7.0, 7.0]), np.array([1.0, 2.0, 9.0]))
    assert m.evaluate(7.0) == pytest.approx(2.0, abs=1e-12)


def test_ot_samples_monotone(rng):
    for trial in range(50):
        r = np.random.default_rng(trial)
        u = r.normal(0, r.uniform(0.5, 60), size=int(r.integers(2, 200)))
        v = r.normal(0, r.uniform(0.5, 60), size=u.size)
        m = ot_map_1d(u, v, grid_size=int(r.integers(2, 512)))
        assert np.all(np.diff(m.samples) >= 0.0)


# --------------------------------------------------------------- kernel map

def test_nw_single_pair_is_constant():
    m = nw_map_1d(np.array([3.0]), np.array([11.0]), KernelConfig(2.0))
    for t in (m.grid_lo, 3.0, m.grid_hi):
        assert m.evaluate(t) == 11.0


def test_nw_symmetric_pairs_average_at_midpoint():
    u = np.array([-1.0, 1.0])
    v = np.array([0.0, 2.0])
    for h in (0.5, 5.0, 20.0):
        m = nw_map_1d(u, v, KernelConfig(h), grid_size=1025)
        assert m.evaluate(0.0) == pytest.approx(1.0, abs=1e-12)


def test_nw_three_point_closed_form():
    m = nw_map_1d(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 4.0]),
                  KernelConfig(1.0), grid_size=4097)
    expected = (1.0 + 4.0 * math.exp(-0.5)) / (1.0 + 2.0 * math.exp(-0.5))
    got = m.evaluate(1.0)
    assert got == pytest.approx(expected, abs=1e-12)
    assert round(got, 3) == 1.548


def test_nw_grid_matches_direct_summation(rng):
    n = 2000
    u = rng.uniform(0, 255, size=n)
    v = rng.uniform(-40, 300, size=n)
    for h in (2.0, 5.0, 20.0):
        m = nw_map_1d(u, v, KernelConfig(h))
        ks = rng.integers(0, m.grid_size, size=150)
        for k in ks:
            g = m.node(int(k))
            w = np.exp(-((g - u) ** 2) / (2 * h * h))
            ref = (w * v).sum() / w.sum()
            assert m.samples[int(k)] == pytest.approx(ref, rel=1e-9)


def test_nw_samples_stay_in_value_hull(rng):
    for trial in range(100):
        r = np.random.default_rng(trial)
        n = int(r.integers(1, 250))
        u = r.normal(0, r.uniform(0.5, 80), size=n)
        v = r.normal(0, r.uniform(0.5, 80), size=n)
        m = nw_map_1d(u, v, KernelConfig(r.uniform(0.5, 20)), grid_size=256)
        assert m.samples.min() >= v.min()
        assert m.samples.max() <= v.max()


def test_nw_sparse_gap_falls_back_to_nearest_value():
    # two pairs far beyond kernel reach: mid-gap nodes take the closer v
    u = np.array([0.0, 1000.0])
    v = np.array([-5.0, 7.0])
    m = nw_map_1d(u, v, KernelConfig(1.0))
    assert m.evaluate(200.0) == -5.0
    assert m.evaluate(800.0) == 7.0


def test_nw_constant_u_gives_mean():
    v = np.array([1.0, 5.0, 9.0, 1.0])
    m = nw_map_1d(np.full(4, 10.0), v, KernelConfig(5.0))
    assert m.evaluate(10.0) == pytest.approx(v.mean(), abs=1e-12)
    assert m.evaluate(m.grid_lo) == pytest.approx(v.mean(), abs=1e-12)


def test_mapper_input_validation():
    with pytest.raises(ValueError):
        nw_map_1d(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        nw_map_1d(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        nw_map_1d(np.array([np.nan]), np.array([1.0]))
    with pytest.raises(ValueError):
        ot_map_1d(np.array([1.0]), np.array([2.0]), grid_size=1)
    with pytest.raises(ValueError):
        KernelConfig(0.0)
    with pytest.raises(ValueError):
        KernelConfig(-2.0)
