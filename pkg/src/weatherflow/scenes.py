"""Seeded synthetic scenes for tests, demos and the CLI's built-in inputs."""

import numpy as np
from scipy import ndimage

from .geometry import CameraRig, Pose, depth_to_disparity, rigid_flow
from .grid import backward_warp


def textured_pattern(shape, seed=0, sigma=1.0, channels=1):
    """Smoothed uniform noise rescaled to [0, 1]; periodic (wrap) blurring."""
    rng = np.random.default_rng(seed)
    h, w = shape
    out = []
    for _ in range(channels):
        noise = rng.uniform(size=(h, w))
        if sigma > 0:
            noise = ndimage.gaussian_filter(noise, sigma, mode="wrap")
        lo, hi = noise.min(), noise.max()
        out.append((noise - lo) / (hi - lo) if hi > lo else np.zeros_like(noise))
    return out[0] if channels == 1 else np.stack(out, axis=-1)


def shifted(img, dx, dy=0):
    """Integer periodic shift so that ``out(p + (dx, dy)) == img(p)``."""
    return np.roll(np.roll(img, dy, axis=0), dx, axis=1)


def depth_ramp(shape, near=2.0, far=30.0, axis=0):
    """Depth increasing linearly from `near` to `far` along `axis` (0 = rows)."""
    h, w = shape
    ramp = np.linspace(near, far, shape[axis])
    return np.broadcast_to(ramp[:, None] if axis == 0 else ramp[None, :], (h, w)).copy()


def moving_square(shape=(64, 64), seed=0, size=20, motion=(3, 0), sigma=0.8):
    """Static textured background with a textured square translating by `motion`.

    Returns ``(frame1, frame2, flow)`` where `flow` is the ground-truth
    forward flow of frame 1 (motion inside the square, zero elsewhere).
    """
    h, w = shape
    bg = textured_pattern(shape, seed, sigma)
    fg = textured_pattern(shape, seed + 1, sigma)
    dx, dy = motion
    top, left = (h - size) // 2, (w - size) // 2 - dx // 2
    inside1 = np.zeros(shape, dtype=bool)
    inside1[top:top + size, left:left + size] = True
    inside2 = shifted(inside1, dx, dy)
    frame1 = np.where(inside1, fg, bg)
    frame2 = np.where(inside2, shifted(fg, dx, dy), bg)
    flow = np.zeros(shape + (2,))
    flow[inside1] = (dx, dy)
    return frame1, frame2, flow


def default_camera(shape):
    h, w = shape
    return CameraRig(fx=0.8 * w, fy=0.8 * w, cx=(w - 1) / 2.0, cy=(h - 1) / 2.0, baseline=0.5)


def stereo_sequence(shape=(64, 64), seed=0, pose=None, cam=None, near=4.0, far=20.0):
    """A two-frame rectified stereo sequence over a depth ramp.

    Frame t+1 is rendered by backward-warping with the rigid flow of the
    backward motion, and right views by the disparity of each depth map.

    Returns a dict with keys ``left``, ``right`` (pairs), ``depth`` (pair),
    ``cam``, ``pose`` and ``flow`` (rigid forward flow of frame t).
    """
    cam = cam or default_camera(shape)
    pose = pose or Pose(np.eye(3), np.array([0.0, 0.0, 0.4]))
    left1 = textured_pattern(shape, seed, sigma=1.0)
    depth1 = depth_ramp(shape, near, far)
    flow, _ = rigid_flow(depth1, cam, pose)
    # approximate depth at t+1 on the frame-1 grid: forward motion shortens range
    depth2 = np.maximum(depth1 - pose.translation[2], 1e-3)
    back, _ = rigid_flow(depth2, cam, pose.inverse())
    left2, _ = backward_warp(left1, back)

    def right_view(left, depth):
        disp = depth_to_disparity(depth, cam)
        warped, _ = backward_warp(left, np.stack([disp, np.zeros_like(disp)], axis=-1))
        return warped

    return {
        "left": (left1, left2),
        "right": (right_view(left1, depth1), right_view(left2, depth2)),
        "depth": (depth1, depth2),
        "cam": cam,
        "pose": pose,
        "flow": flow,
    }


def srma_construct(shape=(64, 64), seed=0, motion=(2, 1)):
    """Domain pair for synthetic-to-real alignment with a known answer.

    Both domains see the same moving-square frames; the real encoder starts
    with twice the synthetic luminance gain. Returns
    ``(pair, theta_s0, theta_r0)``.
    """
    frame1, frame2, _ = moving_square(shape, seed, size=min(shape) // 3, motion=motion, sigma=1.0)
    theta_s0 = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    theta_r0 = theta_s0.copy()
    theta_r0[0] = 2.0
    return (frame1, frame2), theta_s0, theta_r0
