"""Flow and image quality metrics."""

from dataclasses import dataclass

import numpy as np

from .grid import as_flow, as_mask, check_same_size

PSNR_CAP = 99.0
FL_ABS_PX = 3.0
FL_REL = 0.05


@dataclass(frozen=True)
class EvalResult:
    epe: float
    fl_all: float
    valid_count: int

    def to_dict(self):
        return {"epe": self.epe, "fl_all": self.fl_all, "valid_count": self.valid_count}


def _endpoint_errors(flow, gt, valid):
    flow = as_flow(flow)
    gt = as_flow(gt, "ground truth")
    if valid is None:
        valid = np.ones(flow.shape[:2], dtype=bool)
    check_same_size(flow, gt, valid, names=("flow", "ground truth", "valid"))
    valid = as_mask(valid, name="valid")
    if not valid.any():
        raise ValueError("valid mask is empty")
    err = np.hypot(flow[..., 0] - gt[..., 0], flow[..., 1] - gt[..., 1])
    return err[valid], np.hypot(gt[..., 0], gt[..., 1])[valid]


def epe(flow, gt, valid=None):
    """Average end-point error over valid pixels."""
    err, _ = _endpoint_errors(flow, gt, valid)
    return float(err.mean())


def fl_all(flow, gt, valid=None):
    """Percentage of valid pixels with error > 3 px and > 5% of |gt|."""
    err, mag = _endpoint_errors(flow, gt, valid)
    outlier = (err > FL_ABS_PX) & (err > FL_REL * mag)
    return float(100.0 * outlier.mean())


def evaluate(flow, gt, valid=None):
    err, mag = _endpoint_errors(flow, gt, valid)
    outlier = (err > FL_ABS_PX) & (err > FL_REL * mag)
    return EvalResult(float(err.mean()), float(100.0 * outlier.mean()), int(err.size))


def psnr(img, ref):
    """Peak signal-to-noise ratio in dB for [0, 1] images; capped at 99 dB."""
    img = np.asarray(img, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if img.shape != ref.shape:
        raise ValueError(f"dimension mismatch: {img.shape} vs {ref.shape}")
    mse = float(np.mean((img - ref) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(1.0 / mse))
