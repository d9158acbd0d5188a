"""
Flow, rigid flow and the consistency check
==========================================

A two-frame stereo sequence is rendered from a depth ramp and a forward
camera move. We compare the estimated flow against the rigid flow the
geometry predicts, then score it.
"""

import numpy as np

from weatherflow.estimator import estimate_flow
from weatherflow.geometry import fb_consistency_mask, rigid_flow
from weatherflow.metrics import evaluate
from weatherflow.scenes import stereo_sequence

scene = stereo_sequence((128, 128), seed=3)
i1, i2 = scene["left"]
d1, d2 = scene["depth"]
cam, pose = scene["cam"], scene["pose"]

#####################################################
# Rigid flow
# ----------
#
# Back-project with depth, move the camera, project again. A forward move
# expands the image away from the principal point.

rigid, valid = rigid_flow(d1, cam, pose)
print(f"rigid flow: max |u| {np.abs(rigid[..., 0]).max():.2f} px, all in front of camera: {valid.all()}")

#####################################################
# Estimated flow
# --------------

flow = estimate_flow(i1, i2)
back = estimate_flow(i2, i1)
inner = np.zeros(i1.shape, dtype=bool)
inner[16:-16, 16:-16] = True
print("estimate vs rigid (interior):", evaluate(flow, rigid, inner).to_dict())

#####################################################
# Forward-backward check
# ----------------------
#
# Pixels where the forward and backward flows do not cancel are marked
# occluded (or mis-estimated).

occ = fb_consistency_mask(flow, back)
print(f"flagged by the forward-backward check: {100 * occ.mean():.1f}% of pixels")
