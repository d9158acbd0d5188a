"""Static (fog) and dynamic (rain) weather synthesis."""

from dataclasses import dataclass

import numpy as np

from .grid import as_image, check_same_size


@dataclass(frozen=True)
class FogParams:
    """Atmospheric light and scattering coefficient (per unit depth)."""

    atmospheric_light: float | tuple = 0.8
    beta: float = 0.7

    def __post_init__(self):
        a = np.asarray(self.atmospheric_light, dtype=np.float64)
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError("atmospheric light must lie in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")


@dataclass(frozen=True)
class RainParams:
    """Streak renderer settings. Ranges are inclusive ``(low, high)`` pairs."""

    streak_count: int = 60
    length_px: tuple = (4.0, 14.0)
    angle_deg: tuple = (70.0, 110.0)
    intensity: tuple = (0.25, 0.6)
    width_px: tuple = (0.6, 1.6)
    seed: int = 0

    def __post_init__(self):
        if self.streak_count < 0:
            raise ValueError("streak_count must be >= 0")
        for name in ("length_px", "angle_deg", "intensity", "width_px"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: empty range ({lo}, {hi})")
        lo, hi = self.intensity
        if lo < 0 or hi > 1:
            raise ValueError("intensity range must lie in [0, 1]")


def transmission(depth, beta):
    """Koschmieder decay ``t = exp(-beta * D)``."""
    return np.exp(-beta * np.asarray(depth, dtype=np.float64))


def _broadcast_light(a, img):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 0 or img.ndim == 2:
        return a if a.ndim == 0 else a.mean()
    if a.shape != (img.shape[2],):
        raise ValueError(f"atmospheric light has {a.shape[0]} channels, image has {img.shape[2]}")
    return a


def synth_fog(image, depth, params=FogParams(), linear=False):
    """Fog an image along scene depth.

    ``J = I * t(D) + A * (1 - t(D))`` with ``t(D) = exp(-beta * D)``.
    The result is clipped to [0, 1] unless `linear` is set.
    """
    img = as_image(image)
    depth = np.asarray(depth, dtype=np.float64)
    check_same_size(img, depth, names=("image", "depth"))
    if depth.ndim != 2:
        raise ValueError("depth must be a 2-D map")
    if not np.all(np.isfinite(depth)) or np.any(depth <= 0):
        raise ValueError("depth must be finite and strictly positive")
    t = transmission(depth, params.beta)
    if img.ndim == 3:
        t = t[..., None]
    a = _broadcast_light(params.atmospheric_light, img)
    out = img * t + a * (1.0 - t)
    return out if linear else np.clip(out, 0.0, 1.0)


def _segment_distance(px, py, x0, y0, x1, y1):
    dx, dy = x1 - x0, y1 - y0
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return np.hypot(px - x0, py - y0)
    s = np.clip(((px - x0) * dx + (py - y0) * dy) / seg2, 0.0, 1.0)
    return np.hypot(px - (x0 + s * dx), py - (y0 + s * dy))


def render_streaks(shape, params):
    """Render the additive streak layer for a (H, W) frame.

    Each streak is an anti-aliased line segment: pixel coverage falls off
    linearly over one pixel beyond half the streak width. Overlapping
    streaks combine by maximum, so the layer stays within [0, 1]. Streak
    parameters are drawn one streak at a time, so the first n streaks of a
    larger count are identical to a run with count n.
    """
    h, w = shape
    layer = np.zeros((h, w), dtype=np.float64)
    rng = np.random.default_rng(params.seed)
    for _ in range(params.streak_count):
        cx = rng.uniform(0.0, w)
        cy = rng.uniform(0.0, h)
        length = rng.uniform(*params.length_px)
        angle = np.deg2rad(rng.uniform(*params.angle_deg))
        level = rng.uniform(*params.intensity)
        width = rng.uniform(*params.width_px)

        hx = 0.5 * length * np.cos(angle)
        hy = 0.5 * length * np.sin(angle)
        x0, y0, x1, y1 = cx - hx, cy - hy, cx + hx, cy + hy
        reach = 0.5 * width + 1.0
        c0 = max(int(np.floor(min(x0, x1) - reach)), 0)
        c1 = min(int(np.ceil(max(x0, x1) + reach)), w - 1)
        r0 = max(int(np.floor(min(y0, y1) - reach)), 0)
        r1 = min(int(np.ceil(max(y0, y1) + reach)), h - 1)
        if c0 > c1 or r0 > r1:
            continue
        py, px = np.mgrid[r0:r1 + 1, c0:c1 + 1].astype(np.float64)
        dist = _segment_distance(px, py, x0, y0, x1, y1)
        coverage = np.clip(0.5 * width + 0.5 - dist, 0.0, 1.0)
        patch = layer[r0:r1 + 1, c0:c1 + 1]
        np.maximum(patch, level * coverage, out=patch)
    return layer


def synth_rain(image, params=RainParams(), linear=False):
    """Add rain streaks: ``Y = X + D``.

    Returns ``(Y, D)`` where `D` has the same shape as the image. With
    ``linear=True`` no clipping is applied and ``Y - X == D``.
    """
    img = as_image(image)
    layer = render_streaks(img.shape[:2], params)
    streaks = np.repeat(layer[..., None], img.shape[2], axis=2) if img.ndim == 3 else layer
    out = img + streaks
    if not linear:
        out = np.clip(out, 0.0, 1.0)
    return out, streaks


def synth_composite(image, rain, trans, light):
    """Joint degradation ``J = t * (I + R) + (1 - t) * A``."""
    img = as_image(image)
    rain = as_image(rain, name="rain layer")
    trans = np.asarray(trans, dtype=np.float64)
    check_same_size(img, rain, trans, names=("image", "rain", "transmission"))
    if rain.shape != img.shape:
        raise ValueError("rain layer must match the image shape")
    if np.any(trans < 0) or np.any(trans > 1):
        raise ValueError("transmission must lie in [0, 1]")
    if img.ndim == 3 and trans.ndim == 2:
        trans = trans[..., None]
    a = _broadcast_light(light, img)
    return trans * (img + rain) + (1.0 - trans) * a
