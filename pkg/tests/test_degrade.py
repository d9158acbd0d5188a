import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weatherflow.degrade import FogParams, RainParams, render_streaks, synth_composite, synth_fog, synth_rain
from weatherflow.metrics import psnr
from weatherflow.scenes import depth_ramp, shifted, textured_pattern
from weatherflow.warp_error import warp_error_map


def test_fog_beta_zero_is_identity():
    img = textured_pattern((16, 16), 0)
    out = synth_fog(img, depth_ramp((16, 16)), FogParams(beta=0.0))
    assert np.array_equal(out, img)


def test_fog_half_transmission():
    beta = 0.7
    depth = np.full((4, 5), np.log(2.0) / beta)
    out = synth_fog(np.full((4, 5), 0.5), depth, FogParams(0.8, beta))
    np.testing.assert_allclose(out, 0.65, rtol=0, atol=1e-12)


def test_fog_per_channel_light():
    img = np.zeros((3, 3, 3))
    out = synth_fog(img, np.full((3, 3), 1e6), FogParams((0.1, 0.5, 0.9), 1.0))
    np.testing.assert_allclose(out[1, 1], [0.1, 0.5, 0.9])


@pytest.mark.parametrize("depth", [np.zeros((4, 4)), -np.ones((4, 4))])
def test_fog_rejects_bad_depth(depth):
    with pytest.raises(ValueError):
        synth_fog(np.zeros((4, 4)), depth)


def test_fog_rejects_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        synth_fog(np.zeros((4, 4)), np.ones((4, 5)))


def test_fog_params_validation():
    with pytest.raises(ValueError):
        FogParams(atmospheric_light=1.5)
    with pytest.raises(ValueError):
        FogParams(beta=-0.1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0.0, 3.0))
def test_fog_shrinks_contrast(seed, light, beta):
    r = np.random.default_rng(seed)
    img = r.uniform(size=(12, 12))
    depth = r.uniform(0.1, 5.0, size=(12, 12))
    trans = np.exp(-beta * depth)
    # constant transmission isolates the multiplicative shrink
    t = float(trans.mean())
    out = synth_composite(img, np.zeros_like(img), np.full_like(img, t), light)
    assert out.std() <= img.std() + 1e-12


def test_fog_psnr_monotone_in_beta():
    img = textured_pattern((24, 24), 5)
    depth = depth_ramp((24, 24), 0.5, 6.0)
    values = [psnr(synth_fog(img, depth, FogParams(0.8, b)), img) for b in (0.0, 0.1, 0.3, 0.7, 1.2, 2.0)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_fog_moves_with_the_scene():
    img = textured_pattern((20, 20), 2)
    depth = depth_ramp((20, 20), 1.0, 4.0, axis=1)
    dx = 3
    f1 = synth_fog(img, depth, FogParams(0.8, 0.5))
    f2 = synth_fog(shifted(img, dx), shifted(depth, dx), FogParams(0.8, 0.5))
    flow = np.zeros((20, 20, 2))
    flow[..., 0] = dx
    w, oob = warp_error_map(f1, f2, flow)
    assert np.abs(w[:, :-dx]).max() == 0.0


def test_rain_zero_streaks():
    img = textured_pattern((10, 12), 1)
    out, layer = synth_rain(img, RainParams(streak_count=0))
    assert np.array_equal(out, img)
    assert not layer.any()


def test_rain_deterministic_and_seed_sensitive():
    img = textured_pattern((24, 24), 1, channels=3)
    a = synth_rain(img, RainParams(seed=9))
    b = synth_rain(img, RainParams(seed=9))
    c = synth_rain(img, RainParams(seed=10))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(a[1], c[1])


def test_rain_linear_additivity():
    img = textured_pattern((32, 32), 4)
    out, layer = synth_rain(img, RainParams(streak_count=200, seed=3), linear=True)
    assert np.abs((out - img) - layer).max() <= 1e-7
    assert out.max() > 1.0  # unclipped


def test_rain_clipped_by_default():
    out, _ = synth_rain(np.full((16, 16), 0.9), RainParams(streak_count=100, seed=1))
    assert out.max() <= 1.0


def test_streak_layers_are_nested():
    small = render_streaks((30, 30), RainParams(streak_count=10, seed=5))
    big = render_streaks((30, 30), RainParams(streak_count=40, seed=5))
    assert np.all(big >= small)
    assert big.max() <= 0.6


def test_rain_params_validation():
    with pytest.raises(ValueError):
        RainParams(streak_count=-1)
    with pytest.raises(ValueError):
        RainParams(intensity=(0.5, 1.5))
    with pytest.raises(ValueError):
        RainParams(length_px=(5, 2))


def test_composite_reductions():
    r = np.random.default_rng(0)
    img, rain, t = r.uniform(size=(3, 6, 6))
    a = 0.7
    np.testing.assert_array_equal(synth_composite(img, np.zeros_like(img), t, a), t * img + (1 - t) * a)
    np.testing.assert_array_equal(synth_composite(img, rain, np.ones_like(t), a), img + rain)
    np.testing.assert_array_equal(synth_composite(img, rain, np.zeros_like(t), a), np.full_like(img, a))


def test_composite_rejects_bad_transmission():
    with pytest.raises(ValueError):
        synth_composite(np.zeros((3, 3)), np.zeros((3, 3)), np.full((3, 3), 1.2), 0.5)
    with pytest.raises(ValueError):
        synth_composite(np.zeros((3, 3)), np.zeros((3, 4)), np.ones((3, 3)), 0.5)
