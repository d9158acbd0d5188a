"""Coarse-to-fine winner-take-all flow estimation over cost volumes."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .correlation import CostVolume, check_theta, cost_volume, encode_features
from .grid import as_image, backward_warp, check_same_size, downsample2, pixel_grid, sample_bilinear


# luminance centred on mid-grey, gradients emphasised: keeps the cosine discriminative
DEFAULT_THETA = np.array([1.0, 4.0, 4.0, -0.5, 0.0, 0.0])
EXACT_PEAK = 1.0 - 1e-9


@dataclass(frozen=True)
class EstimatorConfig:
    levels: int = 3
    radius: int = 4
    median_window: int = 5
    theta: np.ndarray = field(default_factory=lambda: DEFAULT_THETA.copy())
    aggregate_window: int = 5

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ValueError("median_window must be a positive odd integer")
        if self.aggregate_window < 1 or self.aggregate_window % 2 == 0:
            raise ValueError("aggregate_window must be a positive odd integer")
        object.__setattr__(self, "theta", check_theta(self.theta))

    def with_theta(self, theta):
        return replace(self, theta=np.asarray(theta, dtype=np.float64))

    def to_dict(self):
        return {"levels": self.levels, "radius": self.radius, "median_window": self.median_window,
                "theta": self.theta.tolist(), "aggregate_window": self.aggregate_window}


def pyramid(img, levels):
    """Gaussian pyramid, finest level first."""
    out = [np.asarray(img, dtype=np.float64)]
    for _ in range(levels - 1):
        out.append(downsample2(out[-1]))
    return out


def upsample_flow(flow, shape):
    """Bilinear 2x upsampling onto `shape`, scaling vectors by 2."""
    xs, ys = pixel_grid(*shape)
    up, _ = sample_bilinear(flow, xs / 2.0, ys / 2.0)
    return 2.0 * up


def _parabola_offset(c_minus, c0, c_plus):
    denom = c_minus - 2.0 * c0 + c_plus
    ok = denom < 0
    off = np.where(ok, 0.5 * (c_minus - c_plus) / np.where(ok, denom, -1.0), 0.0)
    return np.clip(off, -0.5, 0.5)


def aggregate(cv, window):
    """Box-average each displacement slice over a ``window x window`` neighbourhood."""
    if window <= 1:
        return cv
    corr = ndimage.uniform_filter(cv.corr, size=(window, window, 1, 1), mode="nearest")
    return CostVolume(np.clip(corr, 0.0, 1.0), cv.valid, cv.radius)


def wta_displacement(cv):
    """Winner-take-all displacement with per-axis parabolic refinement.

    Pixels whose maximum correlation is shared by several displacements get
    a zero update. A peak of 1 is an exact match and is not refined.
    Returns an (H, W, 2) array of (dx, dy).
    """
    h, w = cv.shape
    r = cv.radius
    size = 2 * r + 1
    flat = cv.corr.reshape(h, w, size * size)
    best = flat.argmax(axis=-1)
    peak = np.take_along_axis(flat, best[..., None], axis=-1)
    tie = (flat == peak).sum(axis=-1) > 1
    j, i = np.divmod(best, size)

    rows, cols = np.mgrid[0:h, 0:w]
    corr = cv.corr
    valid = cv.valid
    c0 = corr[rows, cols, j, i]

    def neighbour(dj, di):
        jj = np.clip(j + dj, 0, size - 1)
        ii = np.clip(i + di, 0, size - 1)
        inside = (j + dj >= 0) & (j + dj < size) & (i + di >= 0) & (i + di < size)
        return corr[rows, cols, jj, ii], inside & valid[rows, cols, jj, ii]

    left, ok_l = neighbour(0, -1)
    right, ok_r = neighbour(0, 1)
    up, ok_u = neighbour(-1, 0)
    down, ok_d = neighbour(1, 0)
    refine = c0 < EXACT_PEAK
    sub_x = np.where(ok_l & ok_r & refine, _parabola_offset(left, c0, right), 0.0)
    sub_y = np.where(ok_u & ok_d & refine, _parabola_offset(up, c0, down), 0.0)

    dx = (i - r) + sub_x
    dy = (j - r) + sub_y
    disp = np.stack([dx, dy], axis=-1).astype(np.float64)
    disp[tie] = 0.0
    return disp


def estimate_flow(img1, img2, cfg=EstimatorConfig()):
    """Estimate flow from `img1` to `img2` (``img1(p) ~ img2(p + F(p))``)."""
    img1 = as_image(img1, name="img1")
    img2 = as_image(img2, name="img2")
    check_same_size(img1, img2, names=("img1", "img2"))
    h, w = img1.shape[:2]
    if min(h, w) < 2 ** cfg.levels:
        raise ValueError(f"image {h}x{w} too small for {cfg.levels} pyramid levels")

    pyr1 = pyramid(img1, cfg.levels)
    pyr2 = pyramid(img2, cfg.levels)
    flow = np.zeros(pyr1[-1].shape[:2] + (2,))
    for level in range(cfg.levels - 1, -1, -1):
        a, b = pyr1[level], pyr2[level]
        if flow.shape[:2] != a.shape[:2]:
            flow = upsample_flow(flow, a.shape[:2])
        f1 = encode_features(a, cfg.theta)
        f2, _ = backward_warp(encode_features(b, cfg.theta), flow)
        cv = aggregate(cost_volume(f1, f2, cfg.radius), cfg.aggregate_window)
        flow = flow + wta_displacement(cv)
        if cfg.median_window > 1:
            flow = np.stack([ndimage.median_filter(flow[..., c], size=cfg.median_window, mode="nearest")
                             for c in range(2)], axis=-1)
    return flow
