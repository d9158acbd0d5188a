"""Independent reference implementations used only by the tests."""

import numpy as np


def rigid_flow_oracle(depth, K, R, t):
    """Per-pixel homogeneous projection: p' ~ K [R | t] (D K^-1 p), flow = p' - p."""
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    P = np.hstack([K, np.zeros((3, 1))]) @ T
    Kinv = np.linalg.inv(K)
    h, w = depth.shape
    out = np.zeros((h, w, 2))
    for r in range(h):
        for c in range(w):
            ray = Kinv @ np.array([c, r, 1.0])
            point = np.append(depth[r, c] * ray, 1.0)
            proj = P @ point
            out[r, c] = proj[:2] / proj[2] - (c, r)
    return out


def random_rotation(rng, max_angle):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-max_angle, max_angle)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)
