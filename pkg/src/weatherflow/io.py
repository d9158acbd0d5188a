"""Middlebury ``.flo``, binary Netpbm (P5/P6) and PFM readers and writers."""

import re
from pathlib import Path

import numpy as np

FLO_MAGIC = 202021.25
# rejects absurd headers before allocating (about 2.1 GB of float32 pairs)
MAX_FLO_PIXELS = 1 << 28


class FormatError(ValueError):
    """A file does not follow the format it claims to be in."""


def write_flo(path, flow):
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"flow must be (H, W, 2), got {flow.shape}")
    h, w = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(np.array([FLO_MAGIC], dtype="<f4").tobytes())
        fh.write(np.array([w, h], dtype="<i4").tobytes())
        fh.write(np.ascontiguousarray(flow, dtype="<f4").tobytes())


def read_flo(path):
    """Read a ``.flo`` file into an (H, W, 2) float32 array."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    magic = np.frombuffer(raw, dtype="<f4", count=1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise FormatError(f"{path}: bad magic {float(magic)!r}, expected {FLO_MAGIC}")
    w, h = (int(v) for v in np.frombuffer(raw, dtype="<i4", count=2, offset=4))
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: invalid dimensions {w}x{h}")
    if w * h > MAX_FLO_PIXELS:
        raise FormatError(f"{path}: dimensions {w}x{h} overflow the supported size")
    need = 12 + 8 * w * h
    if len(raw) < need:
        raise FormatError(f"{path}: truncated payload ({len(raw)} of {need} bytes)")
    return np.frombuffer(raw, dtype="<f4", count=2 * w * h, offset=12).reshape(h, w, 2).copy()


_NETPBM_HEADER = re.compile(rb"\A(P[56])\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+"
                            rb"(?:#[^\n]*\n\s*)*(\d+)\s")


def write_netpbm(path, img):
    """Write a [0, 1] image as P5 (2-D) or P6 (H, W, 3) with maxval 255."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot store image of shape {img.shape} as PGM/PPM")
    data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(data.tobytes())


def read_netpbm(path):
    raw = Path(path).read_bytes()
    m = _NETPBM_HEADER.match(raw)
    if m is None:
        if raw[:2] in (b"P5", b"P6"):
            raise FormatError(f"{path}: malformed header")
        raise FormatError(f"{path}: unsupported magic {raw[:2]!r}")
    magic, w, h, maxval = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} unsupported (only 255)")
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: invalid dimensions {w}x{h}")
    channels = 1 if magic == b"P5" else 3
    count = w * h * channels
    data = np.frombuffer(raw, dtype=np.uint8, offset=m.end())
    if data.size < count:
        raise FormatError(f"{path}: truncated payload")
    img = data[:count].astype(np.float64) / 255.0
    return img.reshape(h, w) if channels == 1 else img.reshape(h, w, 3)


def write_pfm(path, img):
    """Little-endian PFM; rows are stored bottom-to-top as the format requires."""
    img = np.asarray(img)
    if img.ndim == 2:
        magic = b"Pf"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"cannot store image of shape {img.shape} as PFM")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n-1.0\n" % (w, h))
        fh.write(np.ascontiguousarray(img[::-1], dtype="<f4").tobytes())


def read_pfm(path):
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4:
        raise FormatError(f"{path}: malformed header")
    magic, dims, scale, payload = parts
    magic = magic.strip()
    if magic not in (b"Pf", b"PF"):
        raise FormatError(f"{path}: unsupported magic {magic[:2]!r}")
    try:
        w, h = (int(v) for v in dims.split())
        scale = float(scale)
    except ValueError:
        raise FormatError(f"{path}: malformed header") from None
    if w <= 0 or h <= 0 or scale == 0:
        raise FormatError(f"{path}: malformed header")
    channels = 1 if magic == b"Pf" else 3
    dtype = "<f4" if scale < 0 else ">f4"
    count = w * h * channels
    if len(payload) < 4 * count:
        raise FormatError(f"{path}: truncated payload")
    data = np.frombuffer(payload, dtype=dtype, count=count).astype(np.float32)
    shape = (h, w) if channels == 1 else (h, w, 3)
    return data.reshape(shape)[::-1].copy()


def read_image(path):
    """Dispatch on the magic bytes: P5/P6 map to [0, 1], PFM stays float32."""
    head = Path(path).read_bytes()[:2]
    if head in (b"Pf", b"PF"):
        return read_pfm(path)
    if head in (b"P5", b"P6"):
        return read_netpbm(path)
    raise FormatError(f"{path}: unsupported magic {head!r}")


def write_image(path, img):
    if str(path).lower().endswith(".pfm"):
        write_pfm(path, img)
    else:
        write_netpbm(path, img)
