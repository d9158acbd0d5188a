"""
Warp-error maps and the patch samplers that feed the contrastive loss.

Positives are drawn on salient edges of the clean warp error; negatives
are the highest-entropy windows of the degraded warp error, kept away
from every positive.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import as_flow, backward_warp, check_same_size, local_entropy, luminance, spatial_derivatives

DEFAULT_PATCH_SIZE = 15
EDGE_PERCENTILE = 90.0


def warp_error_map(img1, img2, flow):
    """Signed residual ``w(i) = I1(i) - I2(i + F(i))``.

    Returns ``(w, oob)``; `w` is zero wherever the sample left the frame.
    """
    img1 = np.asarray(img1, dtype=np.float64)
    img2 = np.asarray(img2, dtype=np.float64)
    flow = as_flow(flow)
    check_same_size(img1, img2, flow, names=("img1", "img2", "flow"))
    if img1.shape != img2.shape:
        raise ValueError(f"frame shapes differ: {img1.shape} vs {img2.shape}")
    warped, oob = backward_warp(img2, flow)
    w = img1 - warped
    w[oob] = 0.0
    return w, oob


@dataclass
class PatchSet:
    """Square patches cut from a warp-error map.

    ``centers`` is an (n, 2) int array of (row, col). ``descriptors`` are
    zero-mean, unit-L2 flattened patches; flat patches get the zero vector
    and are flagged in ``degenerate``. ``shortfall`` counts how many of the
    requested patches could not be supplied.
    """

    centers: np.ndarray
    patch_size: int
    patches: np.ndarray
    descriptors: np.ndarray
    degenerate: np.ndarray
    shortfall: int = 0
    scores: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.centers)

    def to_dict(self):
        return {
            "patch_size": int(self.patch_size),
            "count": len(self),
            "shortfall": int(self.shortfall),
            "centers": self.centers.tolist(),
            "degenerate": self.degenerate.tolist(),
            "descriptors": self.descriptors.tolist(),
        }


def _check_patch_size(patch_size):
    if patch_size < 1 or patch_size % 2 == 0:
        raise ValueError(f"patch_size must be a positive odd integer, got {patch_size}")


def extract_patches(grid, centers, patch_size, shortfall=0):
    """Cut patches around `centers` and build their descriptors."""
    _check_patch_size(patch_size)
    grid = np.asarray(grid, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.intp).reshape(-1, 2)
    r = patch_size // 2
    h, w = grid.shape[:2]
    if len(centers):
        inside = (centers >= r).all(axis=1) & (centers[:, 0] <= h - 1 - r) & (centers[:, 1] <= w - 1 - r)
        if not inside.all():
            raise ValueError("patch centre too close to the border")
    patches = np.stack([grid[rr - r:rr + r + 1, cc - r:cc + r + 1] for rr, cc in centers]) \
        if len(centers) else np.zeros((0, patch_size, patch_size) + grid.shape[2:])
    flat = patches.reshape(len(centers), int(np.prod(patches.shape[1:])))
    flat = flat - flat.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(flat, axis=1)
    degenerate = norms <= 1e-12
    desc = np.zeros_like(flat)
    desc[~degenerate] = flat[~degenerate] / norms[~degenerate, None]
    return PatchSet(centers, patch_size, patches, desc, degenerate, shortfall)


def _interior(shape, patch_size):
    r = patch_size // 2
    keep = np.zeros(shape, dtype=bool)
    if shape[0] > 2 * r and shape[1] > 2 * r:
        keep[r:shape[0] - r, r:shape[1] - r] = True
    return keep


def _chebyshev(a, b):
    return np.max(np.abs(np.asarray(a)[:, None, :] - np.asarray(b)[None, :, :]), axis=-1)


def _greedy_spaced(candidates, n, spacing):
    """Take candidates in order, skipping any closer than `spacing` (Chebyshev)."""
    chosen = []
    for rc in candidates:
        if chosen and np.max(np.abs(np.asarray(chosen) - rc), axis=1).min() < spacing:
            continue
        chosen.append(rc)
        if len(chosen) == n:
            break
    return np.asarray(chosen, dtype=np.intp).reshape(-1, 2)


def edge_aware_sample(w_clean, n=100, patch_size=DEFAULT_PATCH_SIZE, seed=0):
    """Sample positives on salient edges of the clean warp error.

    Edge strength is the gradient magnitude of ``|w_clean|``. Pixels at or
    above the 90th percentile (and strictly positive) qualify; centres are
    drawn from them in seeded random order, without replacement, keeping a
    Chebyshev spacing of at least ``patch_size / 2``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_patch_size(patch_size)
    w_clean = np.asarray(w_clean, dtype=np.float64)
    mag = spatial_derivatives(np.abs(luminance(w_clean)), "grad_mag")
    gate = np.percentile(mag, EDGE_PERCENTILE)
    qualify = (mag >= gate) & (mag > 0) & _interior(mag.shape, patch_size)
    rows, cols = np.nonzero(qualify)
    candidates = np.stack([rows, cols], axis=1)
    order = np.random.default_rng(seed).permutation(len(candidates))
    centers = _greedy_spaced(candidates[order], n, patch_size / 2)
    patchset = extract_patches(w_clean, centers, patch_size, shortfall=n - len(centers))
    patchset.scores = mag[centers[:, 0], centers[:, 1]] if len(centers) else np.zeros(0)
    return patchset


def entropy_aware_sample(w_degraded, n=100, patch_size=DEFAULT_PATCH_SIZE, exclude=(), seed=0):
    """Sample negatives at the highest local entropy of ``|w_degraded|``.

    Candidates within Chebyshev distance `patch_size` of an excluded centre
    are dropped; the rest are ranked by entropy (descending, ties by row
    then column) and taken greedily with spacing ``patch_size / 2``.
    The ranking is fully deterministic; `seed` is accepted for interface
    symmetry with :func:`edge_aware_sample` and does not affect the result.
    """
    del seed
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_patch_size(patch_size)
    w_degraded = np.asarray(w_degraded, dtype=np.float64)
    window = max(patch_size, 3)
    ent = local_entropy(np.abs(luminance(w_degraded)), window)
    keep = _interior(ent.shape, patch_size)
    exclude = np.asarray(exclude, dtype=np.intp).reshape(-1, 2)
    for rr, cc in exclude:
        keep[max(rr - patch_size, 0):rr + patch_size + 1, max(cc - patch_size, 0):cc + patch_size + 1] = False
    rows, cols = np.nonzero(keep)
    order = np.lexsort((cols, rows, -ent[rows, cols]))
    candidates = np.stack([rows[order], cols[order]], axis=1)
    centers = _greedy_spaced(candidates, n, patch_size / 2)
    patchset = extract_patches(w_degraded, centers, patch_size, shortfall=n - len(centers))
    patchset.scores = ent[centers[:, 0], centers[:, 1]] if len(centers) else np.zeros(0)
    return patchset


def min_center_distance(a, b):
    """Smallest Chebyshev distance between two centre sets (inf if either is empty)."""
    a = np.asarray(a).reshape(-1, 2)
    b = np.asarray(b).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        return np.inf
    return int(_chebyshev(a, b).min())
