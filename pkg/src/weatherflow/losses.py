"""
Adaptation objectives as deterministic evaluators.

Each function returns a Python float. Nothing here is differentiated;
optimisation in :mod:`weatherflow.adapt` is derivative-free.
"""

from dataclasses import dataclass, astuple

import numpy as np
from scipy.special import logsumexp

from .grid import as_flow, as_image, as_mask, backward_warp, check_same_size, laplacian, luminance
from .geometry import depth_to_disparity

COMPONENTS = ("pho", "depth", "geo", "consis", "contra", "self", "kl")


@dataclass(frozen=True)
class LossWeights:
    """Weights of the seven loss terms, in :data:`COMPONENTS` order."""

    pho: float = 1.0
    depth: float = 1.0
    geo: float = 0.1
    consis: float = 1.0
    contra: float = 0.1
    self: float = 1.0
    kl: float = 0.1

    def __post_init__(self):
        if any(w < 0 for w in astuple(self)):
            raise ValueError("loss weights must be non-negative")

    def as_array(self):
        return np.array(astuple(self), dtype=np.float64)


@dataclass(frozen=True)
class SparseNormParams:
    p: float = 0.4
    eps: float = 0.01

    def __post_init__(self):
        if not 0 < self.p <= 2:
            raise ValueError("p must lie in (0, 2]")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")


def psi(x, params=SparseNormParams()):
    """Robust penalty ``(|x| + eps) ** p``; works elementwise on arrays."""
    out = (np.abs(np.asarray(x, dtype=np.float64)) + params.eps) ** params.p
    return float(out) if np.ndim(out) == 0 else out


def _pixel_penalty(diff, params):
    pen = psi(diff, params)
    return pen.mean(axis=2) if pen.ndim == 3 else pen


def _masked_mean(values, keep):
    n = np.count_nonzero(keep)
    if n == 0:
        return 0.0
    return float(values[keep].sum() / n)


def photometric_loss(img1, img2, flow_f, flow_b, occ_f, occ_b, params=SparseNormParams()):
    """Bidirectional occlusion-masked photometric loss.

    Pixels whose warp source leaves the frame are treated as occluded.
    A direction with no visible pixels contributes 0.
    """
    img1 = as_image(img1, name="img1")
    img2 = as_image(img2, name="img2")
    flow_f = as_flow(flow_f, "forward flow")
    flow_b = as_flow(flow_b, "backward flow")
    check_same_size(img1, img2, flow_f, flow_b, occ_f, occ_b,
                    names=("img1", "img2", "flow_f", "flow_b", "occ_f", "occ_b"))
    occ_f = as_mask(occ_f, name="occ_f")
    occ_b = as_mask(occ_b, name="occ_b")

    warped2, oob_f = backward_warp(img2, flow_f)
    warped1, oob_b = backward_warp(img1, flow_b)
    fwd = _masked_mean(_pixel_penalty(img1 - warped2, params), ~(occ_f | oob_f))
    bwd = _masked_mean(_pixel_penalty(img2 - warped1, params), ~(occ_b | oob_b))
    return fwd + bwd


def stereo_photometric(left, right, depth, cam, params=SparseNormParams()):
    """Mean penalty between `left` and `right` warped by the depth's disparity."""
    disparity = depth_to_disparity(depth, cam)
    flow = np.stack([-disparity, np.zeros_like(disparity)], axis=-1)
    warped, oob = backward_warp(right, flow)
    return _masked_mean(_pixel_penalty(left - warped, params), ~oob)


def edge_aware_smoothness(depth, image):
    """Mean of ``|lap(D)| * exp(-|lap(I)|)``."""
    return float(np.mean(np.abs(laplacian(depth)) * np.exp(-np.abs(laplacian(image)))))


def depth_loss(left, right, depth, cam, params=SparseNormParams()):
    """Single-frame stereo depth loss: photometric term plus smoothness.

    For a rectified pair, a left pixel at column x appears in the right
    image at ``x - d`` with ``d = fx * B / D``. Out-of-frame samples are
    excluded from the photometric mean.
    """
    left = as_image(left, name="left")
    right = as_image(right, name="right")
    depth = np.asarray(depth, dtype=np.float64)
    check_same_size(left, right, depth, names=("left", "right", "depth"))
    return stereo_photometric(left, right, depth, cam, params) + edge_aware_smoothness(depth, left)


def geo_consistency_loss(flow, rigid, nonrigid):
    """Mean L1 gap between estimated and rigid flow over the rigid region."""
    flow = as_flow(flow)
    rigid = as_flow(rigid, "rigid flow")
    check_same_size(flow, rigid, nonrigid, names=("flow", "rigid flow", "mask"))
    keep = ~as_mask(nonrigid)
    return _masked_mean(np.abs(flow - rigid).sum(axis=-1), keep)


def flow_l1_loss(flow_a, flow_b):
    """Mean over pixels of ``|du| + |dv|``."""
    flow_a = as_flow(flow_a, "flow_a")
    flow_b = as_flow(flow_b, "flow_b")
    check_same_size(flow_a, flow_b, names=("flow_a", "flow_b"))
    return float(np.abs(flow_a - flow_b).sum(axis=-1).mean())


def contrastive_loss(pos_x, pos_y, negatives, tau=0.07):
    """InfoNCE over warp-error patch descriptors.

    For each positive pair j the loss is

        -log( exp(s_j / tau) / (exp(s_j / tau) + sum_i exp(n_ij / tau)) )

    with ``s_j = x_j . y_j`` and ``n_ij = neg_i . x_j``, averaged over j.
    Evaluated in log-space for stability at small `tau`.
    """
    pos_x = np.atleast_2d(np.asarray(pos_x, dtype=np.float64))
    pos_y = np.atleast_2d(np.asarray(pos_y, dtype=np.float64))
    if pos_x.size == 0 or pos_x.shape[0] == 0:
        raise ValueError("contrastive loss needs at least one positive pair")
    if pos_x.shape != pos_y.shape:
        raise ValueError(f"positive sets differ in shape: {pos_x.shape} vs {pos_y.shape}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    negatives = np.asarray(negatives, dtype=np.float64).reshape(-1, pos_x.shape[1])

    pos = np.einsum("jd,jd->j", pos_x, pos_y) / tau
    neg = negatives @ pos_x.T / tau  # (n_neg, n_pos)
    logits = np.vstack([pos[None, :], neg])
    per_pair = logsumexp(logits, axis=0) - pos
    return float(per_pair.mean())


def kl_divergence(p_real, p_synth):
    """``sum_i p_r,i * ln(p_r,i / p_s,i)`` for strictly positive distributions."""
    pr = np.asarray(getattr(p_real, "probabilities", p_real), dtype=np.float64)
    ps = np.asarray(getattr(p_synth, "probabilities", p_synth), dtype=np.float64)
    if pr.shape != ps.shape:
        raise ValueError(f"bin-count mismatch: {pr.size} vs {ps.size}")
    if np.any(pr <= 0) or np.any(ps <= 0):
        raise ValueError("KL divergence needs strictly positive entries")
    return float(np.sum(pr * np.log(pr / ps)))


def total_loss(components, weights=LossWeights()):
    """Weighted sum of the seven components (ordered as :data:`COMPONENTS`)."""
    if isinstance(components, dict):
        components = [components[name] for name in COMPONENTS]
    comps = np.asarray(components, dtype=np.float64)
    if comps.shape != (len(COMPONENTS),):
        raise ValueError(f"expected {len(COMPONENTS)} loss components, got {comps.shape}")
    if np.any(np.isnan(comps)):
        raise ValueError("NaN loss component")
    return float(np.dot(weights.as_array(), comps))
