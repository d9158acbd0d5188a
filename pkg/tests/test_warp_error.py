import numpy as np
import pytest

from weatherflow.degrade import RainParams, synth_rain
from weatherflow.scenes import shifted, textured_pattern
from weatherflow.warp_error import (edge_aware_sample, entropy_aware_sample, extract_patches, min_center_distance,
                                    warp_error_map)


def test_zero_flow_is_plain_difference():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(size=(2, 12, 12))
    w, oob = warp_error_map(a, b, np.zeros((12, 12, 2)))
    np.testing.assert_array_equal(w, a - b)
    assert not oob.any()


def test_aligned_shift_vanishes():
    img = textured_pattern((20, 20), 4)
    flow = np.zeros((20, 20, 2))
    flow[..., 0] = 2.0
    w, oob = warp_error_map(img, shifted(img, 2), flow)
    assert oob[:, -2:].all() and not oob[:, :-2].any()
    assert np.abs(w).max() <= 1e-12


def test_mismatched_dims():
    with pytest.raises(ValueError):
        warp_error_map(np.zeros((4, 4)), np.zeros((4, 5)), np.zeros((4, 4, 2)))
    with pytest.raises(ValueError):
        warp_error_map(np.zeros((4, 4)), np.zeros((4, 4, 3)), np.zeros((4, 4, 2)))


def test_decomposition_under_linear_rain():
    rng = np.random.default_rng(11)
    x1 = textured_pattern((32, 32), 5)
    x2 = textured_pattern((32, 32), 6)
    flow = rng.normal(scale=2.0, size=(32, 32, 2))
    y1, d1 = synth_rain(x1, RainParams(seed=1), linear=True)
    y2, d2 = synth_rain(x2, RainParams(seed=2), linear=True)
    wy, _ = warp_error_map(y1, y2, flow)
    wx, _ = warp_error_map(x1, x2, flow)
    wd, _ = warp_error_map(d1, d2, flow)
    assert np.abs((wy - wx) - wd).max() <= 1e-6


def test_descriptors_unit_or_degenerate():
    rng = np.random.default_rng(1)
    grid = rng.normal(size=(20, 20))
    grid[:7, :7] = 3.0
    ps = extract_patches(grid, [(3, 3), (10, 10), (15, 12)], 7)
    assert ps.degenerate.tolist() == [True, False, False]
    np.testing.assert_allclose(np.linalg.norm(ps.descriptors[1:], axis=1), 1.0)
    assert not ps.descriptors[0].any()
    np.testing.assert_allclose(ps.descriptors[1:].mean(axis=1), 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        extract_patches(grid, [(2, 10)], 7)
    with pytest.raises(ValueError):
        extract_patches(grid, [(10, 10)], 6)


def test_edge_sample_constant_gives_shortfall():
    ps = edge_aware_sample(np.full((32, 32), 0.2), n=5, patch_size=7)
    assert len(ps) == 0 and ps.shortfall == 5


def test_edge_sample_step_edge():
    w = np.zeros((40, 40))
    w[:, 20:] = 1.0
    ps = edge_aware_sample(w, n=6, patch_size=7, seed=3)
    assert len(ps) == 6 and ps.shortfall == 0
    assert np.all(np.abs(ps.centers[:, 1] - 19.5) <= 1.5)
    r = 3
    assert ps.centers.min() >= r and ps.centers.max() <= 39 - r


def test_edge_sample_spacing_and_seed():
    w = np.random.default_rng(2).normal(size=(64, 64))
    a = edge_aware_sample(w, n=20, patch_size=9, seed=1)
    b = edge_aware_sample(w, n=20, patch_size=9, seed=1)
    c = edge_aware_sample(w, n=20, patch_size=9, seed=2)
    np.testing.assert_array_equal(a.centers, b.centers)
    assert not np.array_equal(a.centers, c.centers)
    d = np.max(np.abs(a.centers[:, None] - a.centers[None]), axis=-1)
    assert d[~np.eye(len(a), dtype=bool)].min() >= 4.5


def test_entropy_sample_finds_noisy_stripe():
    rng = np.random.default_rng(3)
    w = np.zeros((48, 64))
    w[:, 30:44] = rng.uniform(-1, 1, size=(48, 14))
    ps = entropy_aware_sample(w, n=4, patch_size=7)
    assert len(ps) == 4
    assert np.all((ps.centers[:, 1] >= 30) & (ps.centers[:, 1] <= 43))


def test_entropy_sample_exclusion_and_determinism():
    rng = np.random.default_rng(4)
    w = rng.uniform(-1, 1, size=(40, 40))
    exclude = [(10, 10), (30, 25)]
    a = entropy_aware_sample(w, n=8, patch_size=5, exclude=exclude)
    b = entropy_aware_sample(w, n=8, patch_size=5, exclude=exclude, seed=99)
    np.testing.assert_array_equal(a.centers, b.centers)
    assert min_center_distance(a.centers, exclude) > 5
    everything = [(r, c) for r in range(0, 40, 5) for c in range(0, 40, 5)]
    starved = entropy_aware_sample(w, n=3, patch_size=5, exclude=everything)
    assert len(starved) == 0 and starved.shortfall == 3


def test_min_center_distance():
    assert min_center_distance([(0, 0)], [(3, -4)]) == 4
    assert min_center_distance([], [(1, 1)]) == np.inf
