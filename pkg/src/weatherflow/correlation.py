"""
Feature encoding, cost volumes, correlation histograms and EMA updates.

The encoder is a fixed analytic map ``[luminance, Ix, Iy]`` followed by a
per-channel affine transform. Its six parameters (three gains, then three
biases) are what the synthetic-to-real stage optimises and tracks.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grid import gradients, luminance

BASE_CHANNELS = 3
IDENTITY_THETA = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


def check_theta(theta):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (2 * BASE_CHANNELS,):
        raise ValueError(f"theta must hold {2 * BASE_CHANNELS} values (gains then biases), got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    if np.any(theta[:BASE_CHANNELS] <= 0):
        raise ValueError("encoder gains must be positive")
    return theta


def encode_features(img, theta=IDENTITY_THETA):
    """Encode an image into an (H, W, 3) feature map."""
    theta = check_theta(theta)
    ix, iy = gradients(img)
    raw = np.stack([luminance(img), ix, iy], axis=-1)
    return raw * theta[:BASE_CHANNELS] + theta[BASE_CHANNELS:]


@dataclass
class CostVolume:
    """Per-pixel correlations over a ``(2r+1) x (2r+1)`` displacement window.

    ``corr[y, x, dy + r, dx + r]`` compares ``f1(y, x)`` with
    ``f2(y + dy, x + dx)``. Out-of-frame neighbours hold 0 and are False
    in ``valid``.
    """

    corr: np.ndarray
    valid: np.ndarray
    radius: int

    @property
    def shape(self):
        return self.corr.shape[:2]

    def displacements(self):
        """(dx, dy) for each flattened window index."""
        r = self.radius
        dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
        return np.stack([dx.ravel(), dy.ravel()], axis=1)


def cost_volume(f1, f2, radius=4):
    """Cosine similarity mapped to [0, 1] by ``(c + 1) / 2``.

    Zero-length feature vectors have cosine 0 with everything.
    """
    f1 = np.asarray(f1, dtype=np.float64)
    f2 = np.asarray(f2, dtype=np.float64)
    if f1.shape != f2.shape:
        raise ValueError(f"feature maps differ in shape: {f1.shape} vs {f2.shape}")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    h, w = f1.shape[:2]
    n1 = np.linalg.norm(f1, axis=-1)
    n2 = np.linalg.norm(f2, axis=-1)
    u1 = np.divide(f1, n1[..., None], out=np.zeros_like(f1), where=n1[..., None] > 0)
    u2 = np.divide(f2, n2[..., None], out=np.zeros_like(f2), where=n2[..., None] > 0)

    size = 2 * radius + 1
    u2p = np.pad(u2, ((radius, radius), (radius, radius), (0, 0)))
    inside = np.pad(np.ones((h, w), dtype=bool), radius)
    corr = np.zeros((h, w, size, size))
    valid = np.zeros((h, w, size, size), dtype=bool)
    for j in range(size):
        for i in range(size):
            window = u2p[j:j + h, i:i + w]
            cos = np.clip(np.einsum("hwc,hwc->hw", u1, window), -1.0, 1.0)
            ok = inside[j:j + h, i:i + w]
            corr[:, :, j, i] = np.where(ok, 0.5 * (cos + 1.0), 0.0)
            valid[:, :, j, i] = ok
    return CostVolume(corr, valid, radius)


@dataclass
class CorrelationHistogram:
    """Offset-smoothed k-bin distribution ``p_i = (m_i + 1) / (M + k)``."""

    k: int
    thresholds: np.ndarray
    counts: np.ndarray
    probabilities: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    def exact_probabilities(self):
        denom = self.total + self.k
        return [Fraction(int(m) + 1, denom) for m in self.counts]

    def to_dict(self):
        return {
            "k": self.k,
            "M": self.total,
            "thresholds": self.thresholds.tolist(),
            "counts": self.counts.tolist(),
            "probabilities": self.probabilities.tolist(),
        }


def histogram_from_values(values, k=10):
    """Bin values in [0, 1] into k equal bins (last bin closed) and smooth."""
    if k < 2:
        raise ValueError("k must be >= 2")
    values = np.asarray(values, dtype=np.float64).ravel()
    idx = np.minimum(np.floor(values * k).astype(np.intp), k - 1)
    counts = np.bincount(idx, minlength=k).astype(np.int64)
    probs = (counts + 1) / float(len(values) + k)
    thresholds = np.arange(1, k) / k
    return CorrelationHistogram(k, thresholds, counts, probs)


def correlation_histogram(cv, m=1000, k=10, seed=0):
    """Draw `m` valid cost-volume entries uniformly (with replacement) and bin them."""
    if m < 1:
        raise ValueError("M must be >= 1")
    pool = cv.corr[cv.valid]
    if pool.size == 0:
        raise ValueError("cost volume has no valid entries")
    idx = np.random.default_rng(seed).integers(0, pool.size, size=m)
    return histogram_from_values(pool[idx], k)


def ema_update(theta_r, theta_s, lam=0.99):
    """``theta_r * lam + theta_s * (1 - lam)``, elementwise."""
    theta_r = np.asarray(theta_r, dtype=np.float64)
    theta_s = np.asarray(theta_s, dtype=np.float64)
    if theta_r.shape != theta_s.shape:
        raise ValueError(f"parameter length mismatch: {theta_r.size} vs {theta_s.size}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    return theta_r * lam + theta_s * (1.0 - lam)
