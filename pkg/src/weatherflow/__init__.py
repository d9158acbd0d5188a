"""Adverse-weather optical flow: degradation synthesis, geometry, losses and adaptation."""

from .adapt import CdmaReport, SrmaTrace, relative_gain, run_cdma, run_srma
from .config import RunConfig, derive_seed
from .correlation import (CorrelationHistogram, CostVolume, correlation_histogram, cost_volume, ema_update,
                          encode_features)
from .degrade import FogParams, RainParams, synth_composite, synth_fog, synth_rain
from .estimator import EstimatorConfig, estimate_flow
from .geometry import CameraRig, Pose, depth_to_disparity, fb_consistency_mask, rigid_flow
from .grid import backward_warp, bilinear_sample, downsample2, local_entropy, spatial_derivatives
from .losses import (LossWeights, SparseNormParams, contrastive_loss, depth_loss, flow_l1_loss,
                     geo_consistency_loss, kl_divergence, photometric_loss, psi, total_loss)
from .metrics import EvalResult, epe, evaluate, fl_all, psnr
from .warp_error import PatchSet, edge_aware_sample, entropy_aware_sample, warp_error_map

__version__ = "0.1.0"
