"""Pinhole camera geometry: rigid flow, forward-backward checks, disparity."""

from dataclasses import dataclass, field

import numpy as np

from .grid import as_flow, check_same_size, pixel_grid, sample_bilinear


@dataclass(frozen=True)
class CameraRig:
    fx: float
    fy: float
    cx: float
    cy: float
    baseline: float = 0.54

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.baseline <= 0:
            raise ValueError("stereo baseline must be positive")

    @property
    def K(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   float(d.get("baseline", 0.54)))

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "baseline": self.baseline}


@dataclass(frozen=True)
class Pose:
    """Relative camera motion ``X' = R X + t`` from frame t to t+1."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(r.T @ r, np.eye(3), rtol=0, atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant must be +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def inverse(self):
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d.get("rotation", np.eye(3).ravel()), dtype=np.float64).reshape(3, 3),
                   np.asarray(d.get("translation", [0.0, 0.0, 0.0]), dtype=np.float64))

    def to_dict(self):
        return {"rotation": self.rotation.ravel().tolist(), "translation": self.translation.tolist()}


def rotation_from_euler(rx, ry, rz):
    """Rotation matrix ``Rz @ Ry @ Rx`` from angles in radians."""
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    rot_x = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    rot_y = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rot_z = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rot_z @ rot_y @ rot_x


def _check_depth(depth):
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ValueError("depth must be a 2-D map")
    if not np.all(np.isfinite(depth)) or np.any(depth <= 0):
        raise ValueError("depth must be finite and strictly positive")
    return depth


def rigid_flow(depth, cam, pose):
    """Flow induced by camera motion over a static scene.

    Each pixel is back-projected with its depth, moved by `pose` and
    re-projected; the flow is the image-plane displacement.

    Returns
    -------
    flow : (H, W, 2) ndarray
    valid : (H, W) bool ndarray
        False where the transformed point lies on or behind the camera
        plane; flow is zero there.
    """
    depth = _check_depth(depth)
    xs, ys = pixel_grid(*depth.shape)
    X = (xs - cam.cx) / cam.fx * depth
    Y = (ys - cam.cy) / cam.fy * depth
    Z = depth
    R, t = pose.rotation, pose.translation
    X2 = R[0, 0] * X + R[0, 1] * Y + R[0, 2] * Z + t[0]
    Y2 = R[1, 0] * X + R[1, 1] * Y + R[1, 2] * Z + t[1]
    Z2 = R[2, 0] * X + R[2, 1] * Y + R[2, 2] * Z + t[2]
    valid = Z2 > 0
    safe_z2 = np.where(valid, Z2, 1.0)
    # differencing normalised coordinates keeps the identity pose exactly at zero flow
    u = cam.fx * (X2 / safe_z2 - X / Z)
    v = cam.fy * (Y2 / safe_z2 - Y / Z)
    flow = np.stack([np.where(valid, u, 0.0), np.where(valid, v, 0.0)], axis=-1)
    return flow, valid


def sample_flow_at_target(flow_b, flow_f):
    """``Fb(x + Ff(x))`` via bilinear sampling with border clamping."""
    xs, ys = pixel_grid(*flow_f.shape[:2])
    sampled, _ = sample_bilinear(flow_b, xs + flow_f[..., 0], ys + flow_f[..., 1])
    return sampled


def fb_consistency_mask(flow_f, flow_b, alpha1=0.01, alpha2=0.5):
    """Forward-backward consistency check.

    A pixel is marked (True) when

        |Ff(x) + Fb(x + Ff(x))|^2 >= alpha1 * (|Ff(x)|^2 + |Fb(x + Ff(x))|^2) + alpha2

    i.e. when the consistency constraint is violated. Boundary equality
    counts as a violation.
    """
    flow_f = as_flow(flow_f, "forward flow")
    flow_b = as_flow(flow_b, "backward flow")
    check_same_size(flow_f, flow_b, names=("forward flow", "backward flow"))
    fb = sample_flow_at_target(flow_b, flow_f)
    lhs = np.sum((flow_f + fb) ** 2, axis=-1)
    rhs = alpha1 * (np.sum(flow_f ** 2, axis=-1) + np.sum(fb ** 2, axis=-1)) + alpha2
    return lhs >= rhs


def depth_to_disparity(depth, cam):
    """Stereo disparity ``fx * B / D`` in pixels."""
    depth = _check_depth(depth)
    return cam.fx * cam.baseline / depth


def disparity_to_depth(disparity, cam):
    disparity = np.asarray(disparity, dtype=np.float64)
    if np.any(disparity <= 0):
        raise ValueError("disparity must be strictly positive")
    return cam.fx * cam.baseline / disparity
