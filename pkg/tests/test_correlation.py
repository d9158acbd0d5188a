from fractions import Fraction

import numpy as np
import pytest

from weatherflow.correlation import (CostVolume, correlation_histogram, cost_volume, ema_update, encode_features,
                                     histogram_from_values)
from weatherflow.grid import gradients
from weatherflow.scenes import shifted, textured_pattern

IDENT = [1, 1, 1, 0, 0, 0]


def test_identity_encoder_is_raw_channels():
    img = textured_pattern((10, 12), 0)
    feats = encode_features(img, IDENT)
    ix, iy = gradients(img)
    np.testing.assert_array_equal(feats, np.stack([img, ix, iy], axis=-1))
    np.testing.assert_allclose(encode_features(img, [2, 2, 2, 0, 0, 0]), 2 * feats)


def test_constant_image_channels():
    feats = encode_features(np.full((5, 5), 0.4), [2, 3, 4, 0.1, -0.2, 0.3])
    np.testing.assert_allclose(feats[..., 0], 0.9)
    np.testing.assert_allclose(feats[..., 1], -0.2)
    np.testing.assert_allclose(feats[..., 2], 0.3)


def test_theta_validation():
    img = np.zeros((4, 4))
    for bad in ([1, 1, 1], [1, 1, 0, 0, 0, 0], [1, 1, np.nan, 0, 0, 0]):
        with pytest.raises(ValueError):
            encode_features(img, bad)


def _argmax_disp(cv):
    h, w = cv.shape
    flat = cv.corr.reshape(h, w, -1).argmax(axis=-1)
    return cv.displacements()[flat]


def test_self_similarity_peaks_at_zero():
    f = encode_features(textured_pattern((24, 24), 1), [1, 4, 4, -0.5, 0, 0])
    cv = cost_volume(f, f, radius=3)
    disp = _argmax_disp(cv)
    assert not disp[3:-3, 3:-3].any()
    np.testing.assert_allclose(cv.corr[..., 3, 3], 1.0)


def test_shift_peaks_at_offset():
    img = textured_pattern((24, 24), 2)
    theta = [1, 4, 4, -0.5, 0, 0]
    cv = cost_volume(encode_features(img, theta), encode_features(shifted(img, 2), theta), radius=3)
    disp = _argmax_disp(cv)
    assert np.all(disp[3:-3, 3:-5] == (2, 0))


def test_cosine_endpoints_and_oob():
    a = np.zeros((3, 3, 2))
    a[..., 0] = 1.0
    cv = cost_volume(a, a, radius=1)
    assert cv.corr[1, 1].min() == 1.0
    cv = cost_volume(a, -a, radius=1)
    assert cv.corr[1, 1].max() == 0.0
    assert not cv.valid[0, 0, 0, 0] and cv.corr[0, 0, 0, 0] == 0.0
    with pytest.raises(ValueError):
        cost_volume(a, a[:2], radius=1)
    with pytest.raises(ValueError):
        cost_volume(a, a, radius=0)


def test_histogram_single_bin_exact():
    corr = np.full((10, 10, 3, 3), 0.05)
    cv = CostVolume(corr, np.ones_like(corr, dtype=bool), 1)
    hist = correlation_histogram(cv, m=1000, k=10, seed=0)
    exact = hist.exact_probabilities()
    assert exact[0] == Fraction(1001, 1010)
    assert all(p == Fraction(1, 1010) for p in exact[1:])
    assert sum(exact) == 1
    assert hist.probabilities.sum() == pytest.approx(1.0, abs=1e-15)


def test_histogram_bin_edges():
    hist = histogram_from_values([0.0, 0.1, 0.999, 1.0], k=10)
    assert hist.counts.tolist() == [1, 1, 0, 0, 0, 0, 0, 0, 0, 2]


def test_histogram_uniform_within_three_sigma():
    rng = np.random.default_rng(5)
    corr = rng.uniform(size=(40, 40, 3, 3))
    cv = CostVolume(corr, np.ones_like(corr, dtype=bool), 1)
    m, k = 1000, 10
    hist = correlation_histogram(cv, m=m, k=k, seed=3)
    expected = (m / k + 1) / (m + k)
    sigma = np.sqrt(m * 0.1 * 0.9) / (m + k)
    assert np.all(np.abs(hist.probabilities - expected) <= 3 * sigma)


def test_histogram_ignores_invalid_and_errors():
    corr = np.full((4, 4, 3, 3), 0.95)
    valid = np.ones_like(corr, dtype=bool)
    corr[..., 0, 0] = 0.0
    valid[..., 0, 0] = False
    hist = correlation_histogram(CostVolume(corr, valid, 1), m=200, k=10)
    assert hist.counts[-1] == 200
    with pytest.raises(ValueError):
        correlation_histogram(CostVolume(corr, np.zeros_like(valid), 1))
    with pytest.raises(ValueError):
        correlation_histogram(CostVolume(corr, valid, 1), m=0)
    with pytest.raises(ValueError):
        histogram_from_values([0.5], k=1)


def test_ema():
    theta = np.arange(6.0)
    np.testing.assert_array_equal(ema_update(theta, theta, 0.99), theta)
    assert ema_update([0.0], [1.0], 0.99)[0] == pytest.approx(0.01)
    with pytest.raises(ValueError):
        ema_update([0.0, 1.0], [1.0], 0.5)
    with pytest.raises(ValueError):
        ema_update([0.0], [1.0], 1.5)


def test_ema_geometric_contraction():
    target = np.array([2.0, 1, 1, 0, 0, 0])
    theta = np.array([1.0, 1, 1, 0.5, 0, 0])
    start = np.abs(theta - target)
    for n in range(1, 51):
        theta = ema_update(theta, target, 0.9)
        np.testing.assert_allclose(np.abs(theta - target), start * 0.9 ** n, rtol=1e-12)
