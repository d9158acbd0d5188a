"""
Grid containers and image-processing primitives.

Images are float64 arrays of shape (H, W) or (H, W, C) with C in {1, 2, 3}.
Flow fields are arrays of shape (H, W, 2) holding (u, v) displacements in
pixels, u along columns (x) and v along rows (y). Masks are boolean (H, W)
arrays.

All functions here are pure; none modify their inputs.
"""

import numpy as np
from scipy import ndimage

ENTROPY_BINS = 16
_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def as_image(img, linear=True, name="image"):
    """Validate and return `img` as a float64 array.

    With ``linear=False`` every value must lie in [0, 1].
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] not in (1, 2, 3):
        raise ValueError(f"{name}: channel count must be 1, 2 or 3, got {arr.shape[2]}")
    if arr.ndim not in (2, 3) or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name}: expected (H, W) or (H, W, C) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    if not linear and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name}: values outside [0, 1]")
    return arr


def as_flow(flow, name="flow"):
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"{name}: expected (H, W, 2) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    return arr


def as_mask(mask, shape=None, name="mask"):
    arr = np.asarray(mask)
    if arr.dtype != bool:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{name}: must be binary")
        arr = arr.astype(bool)
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name}: shape {arr.shape} does not match {tuple(shape)}")
    return arr


def check_same_size(*arrays, names=None):
    """Raise ValueError unless all arrays share the same (H, W)."""
    shapes = [np.shape(a)[:2] for a in arrays]
    if any(s != shapes[0] for s in shapes[1:]):
        label = ", ".join(names) if names else "inputs"
        raise ValueError(f"dimension mismatch between {label}: {shapes}")


def luminance(img):
    """Unweighted channel mean; 2-D input is returned as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        return arr.mean(axis=2)
    return arr


def sample_bilinear(img, x, y):
    """Bilinearly sample `img` at real coordinates.

    Parameters
    ----------
    img : ndarray
        (H, W) or (H, W, C) grid.
    x, y : array_like
        Column and row coordinates, broadcast against each other.

    Returns
    -------
    values : ndarray
        Samples with shape ``broadcast(x, y).shape`` (+ ``(C,)`` for
        multi-channel input).
    oob : ndarray of bool
        True where the requested coordinate fell outside
        ``[0, W-1] x [0, H-1]``. Such samples are taken at the clamped
        border position.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    oob = (x < 0) | (x > w - 1) | (y < 0) | (y > h - 1)
    xc = np.clip(x, 0, w - 1)
    yc = np.clip(y, 0, h - 1)
    x0 = np.floor(xc).astype(np.intp)
    y0 = np.floor(yc).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy, oob


def bilinear_sample(img, x, y):
    """Sample a single point; returns ``(value, out_of_bounds)``.

    ``value`` is a float for single-channel images and a length-C array
    otherwise.
    """
    value, oob = sample_bilinear(img, x, y)
    if np.ndim(value) == 0:
        return float(value), bool(oob)
    return np.asarray(value), bool(oob)


def pixel_grid(h, w):
    """Return (xs, ys) coordinate arrays of shape (h, w)."""
    ys, xs = np.mgrid[0:h, 0:w]
    return xs.astype(np.float64), ys.astype(np.float64)


def backward_warp(img, flow):
    """Backward-warp `img` by `flow`: ``out(p) = img(p + flow(p))``.

    Returns the warped grid and a boolean mask of pixels whose source
    coordinate fell outside the frame.
    """
    img = np.asarray(img, dtype=np.float64)
    flow = as_flow(flow)
    check_same_size(img, flow, names=("image", "flow"))
    xs, ys = pixel_grid(*img.shape[:2])
    return sample_bilinear(img, xs + flow[..., 0], ys + flow[..., 1])


def downsample2(img):
    """Binomial 5-tap blur followed by 2x decimation.

    Output size is ``ceil(H/2) x ceil(W/2)``; borders are replicated.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.shape[0] < 2 or img.shape[1] < 2:
        raise ValueError(f"downsample2 needs at least 2x2 input, got {img.shape[:2]}")
    out = ndimage.convolve1d(img, _BINOMIAL5, axis=0, mode="nearest")
    out = ndimage.convolve1d(out, _BINOMIAL5, axis=1, mode="nearest")
    return out[::2, ::2]


def gradients(img):
    """Central-difference (Ix, Iy) of the luminance with replicated borders."""
    lum = np.pad(luminance(img), 1, mode="edge")
    ix = 0.5 * (lum[1:-1, 2:] - lum[1:-1, :-2])
    iy = 0.5 * (lum[2:, 1:-1] - lum[:-2, 1:-1])
    return ix, iy


def laplacian(img):
    """4-neighbour Laplacian ``sum(neighbours) - 4*centre``, borders replicated."""
    lum = np.pad(luminance(img), 1, mode="edge")
    c = lum[1:-1, 1:-1]
    return lum[:-2, 1:-1] + lum[2:, 1:-1] + lum[1:-1, :-2] + lum[1:-1, 2:] - 4.0 * c


def spatial_derivatives(img, kind="grad_mag"):
    """Gradient magnitude or Laplacian of the luminance of `img`."""
    if kind == "grad_mag":
        ix, iy = gradients(img)
        return np.sqrt(ix * ix + iy * iy)
    if kind == "laplacian":
        return laplacian(img)
    raise ValueError(f"unknown derivative kind {kind!r}")


def _box_count(indicator, window):
    # exact integer window sums via a summed-area table on an edge-padded grid
    r = window // 2
    padded = np.pad(indicator.astype(np.int64), r, mode="edge")
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    sat[1:, 1:] = padded.cumsum(0).cumsum(1)
    h, w = indicator.shape
    return (sat[window:window + h, window:window + w] - sat[:h, window:window + w]
            - sat[window:window + h, :w] + sat[:h, :w])


def intensity_bins(img, nbins=ENTROPY_BINS):
    """Bin index in ``[0, nbins)`` of each luminance value clipped to [0, 1]."""
    lum = np.clip(luminance(img), 0.0, 1.0)
    return np.minimum((lum * nbins).astype(np.intp), nbins - 1)


def local_entropy(img, window):
    """Shannon entropy (nats) of a 16-bin intensity histogram per window.

    The window is centred on each pixel and borders are replicated, so the
    result lies in ``[0, ln 16]``.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"entropy window must be odd and >= 3, got {window}")
    bins = intensity_bins(img)
    total = float(window * window)
    ent = np.zeros(bins.shape, dtype=np.float64)
    for b in range(ENTROPY_BINS):
        counts = _box_count(bins == b, window)
        p = counts / total
        nz = counts > 0
        ent[nz] -= p[nz] * np.log(p[nz])
    # summation rounding can leave -0.0 or a hair below zero
    return np.maximum(ent, 0.0)
