"""
Desk-scale adaptation harness.

``run_cdma`` evaluates the clean-to-degraded loss structure on one stereo
sequence. ``run_srma`` optimises the synthetic encoder parameters by greedy
coordinate descent on KL + self-supervision, tracking the real encoder by EMA.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .config import RunConfig, derive_seed
from .correlation import check_theta, correlation_histogram, cost_volume, ema_update, encode_features
from .degrade import synth_fog, synth_rain
from .estimator import EstimatorConfig, estimate_flow
from .geometry import fb_consistency_mask, rigid_flow
from .losses import (LossWeights, contrastive_loss, depth_loss, flow_l1_loss, geo_consistency_loss,
                     kl_divergence, photometric_loss, total_loss)
from .warp_error import edge_aware_sample, entropy_aware_sample, extract_patches, warp_error_map


class StageError(RuntimeError):
    """A module failed inside a named pipeline stage."""

    def __init__(self, stage, err):
        super().__init__(f"[{stage}] {err}")
        self.stage = stage
        self.__cause__ = err


class _stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, (ValueError, ArithmeticError)):
            raise StageError(self.name, exc) from exc
        return False


@dataclass
class CdmaReport:
    pho: float
    depth: float
    geo: float
    consis_static: float
    consis_dynamic: float
    contra: float
    total: float
    positives: dict
    negatives: dict
    fill: dict = field(default_factory=dict)
    # intermediate grids (flows, degraded frames); not serialised
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def consis(self):
        return self.consis_static + self.consis_dynamic

    def losses(self):
        return {"pho": self.pho, "depth": self.depth, "geo": self.geo, "consis": self.consis,
                "consis_static": self.consis_static, "consis_dynamic": self.consis_dynamic,
                "contra": self.contra, "total": self.total}

    def to_dict(self):
        return {"losses": self.losses(), "positives": self.positives, "negatives": self.negatives,
                "fill": self.fill}


def _patch_summary(ps):
    return {"count": len(ps), "shortfall": int(ps.shortfall), "patch_size": int(ps.patch_size),
            "degenerate": int(ps.degenerate.sum()), "centers": ps.centers.tolist()}


def run_cdma(clean_pair, right_pair, depth_pair, pose, cam, fog=None, rain=None, cfg=None):
    """Evaluate every clean-to-degraded loss on one two-frame stereo sequence.

    `depth_pair` holds the left depth maps at t and t+1. `fog` and `rain`
    default to the values in `cfg`; the two rain frames get independent
    streak layers derived from the rain seed.
    """
    cfg = cfg or RunConfig()
    fog = fog or cfg.fog
    rain = rain or cfg.rain
    est = cfg.estimator
    i1, i2 = (np.asarray(x, dtype=np.float64) for x in clean_pair)
    r1, r2 = right_pair
    d1, d2 = depth_pair

    with _stage("clean-flow"):
        flow_c = estimate_flow(i1, i2, est)
        flow_cb = estimate_flow(i2, i1, est)
    with _stage("geometry"):
        rigid_f, ok_f = rigid_flow(d1, cam, pose)
        rigid_b, ok_b = rigid_flow(d2, cam, pose.inverse())
        nonrigid = fb_consistency_mask(rigid_f, rigid_b, cfg.alpha1, cfg.alpha2) | ~ok_f
        occ_f = fb_consistency_mask(flow_c, flow_cb, cfg.alpha1, cfg.alpha2)
        occ_b = fb_consistency_mask(flow_cb, flow_c, cfg.alpha1, cfg.alpha2)
        geo = geo_consistency_loss(flow_c, rigid_f, nonrigid)
    with _stage("photometric"):
        pho = photometric_loss(i1, i2, flow_c, flow_cb, occ_f, occ_b, cfg.norm)
    with _stage("depth"):
        dep = depth_loss(i1, r1, d1, cam, cfg.norm) + depth_loss(i2, r2, d2, cam, cfg.norm)

    with _stage("degrade"):
        fog1, fog2 = synth_fog(i1, d1, fog), synth_fog(i2, d2, fog)
        seeds = (derive_seed(rain.seed, "rain-t"), derive_seed(rain.seed, "rain-t1"))
        rain1, _ = synth_rain(i1, _reseeded(rain, seeds[0]))
        rain2, _ = synth_rain(i2, _reseeded(rain, seeds[1]))
    with _stage("degraded-flow"):
        flow_ss = estimate_flow(fog1, fog2, est)
        flow_sd = estimate_flow(rain1, rain2, est)
        consis_s = flow_l1_loss(flow_ss, flow_c)
        consis_d = flow_l1_loss(flow_sd, flow_c)

    with _stage("warp-error"):
        w_x, _ = warp_error_map(i1, i2, flow_c)
        w_y, _ = warp_error_map(rain1, rain2, flow_c)
        n, size = cfg.sampling.n, cfg.sampling.patch_size
        pos_x = edge_aware_sample(w_x, n, size, seed=derive_seed(cfg.seed, "edge-aware"))
        pos_y = extract_patches(w_y, pos_x.centers, size)
        negs = entropy_aware_sample(w_y, n, size, exclude=pos_x.centers)
        contra = (contrastive_loss(pos_x.descriptors, pos_y.descriptors, negs.descriptors, cfg.tau)
                  if len(pos_x) else 0.0)

    consis = consis_s + consis_d
    total = total_loss([pho, dep, geo, consis, contra, 0.0, 0.0], cfg.weights)
    fill = {"nonrigid": float(nonrigid.mean()), "occ_f": float(occ_f.mean()), "occ_b": float(occ_b.mean())}
    report = CdmaReport(pho, dep, geo, consis_s, consis_d, contra, total,
                        _patch_summary(pos_x), _patch_summary(negs), fill,
                        {"flow_c": flow_c, "flow_ss": flow_ss, "flow_sd": flow_sd, "fog": (fog1, fog2),
                         "rain": (rain1, rain2), "w_x": w_x, "w_y": w_y})
    bad = {k: v for k, v in report.losses().items() if not (np.isfinite(v) and v >= 0)}
    if bad:
        raise StageError("report", ValueError(f"invalid loss values {bad}"))
    return report


def _reseeded(rain, seed):
    return replace(rain, seed=seed)


@dataclass
class SrmaTrace:
    """State after one SRMA iteration.

    ``objective_start`` is the objective before any move; ``accepted`` lists
    the objective after each accepted move (non-increasing). ``theta_r`` is
    the real-domain parameter vector after the EMA update.
    """

    iteration: int
    kl_start: float
    kl: float
    self_loss: float
    objective_start: float
    objective: float
    accepted: list
    theta_s: list
    theta_r: list

    def to_dict(self):
        return dict(self.__dict__)


def relative_gain(theta):
    """Luminance gain relative to the mean gradient gain.

    The cosine cost volume cannot see a common rescaling of all channels, so
    this ratio is the identifiable part of the encoder gains.
    """
    theta = np.asarray(theta, dtype=np.float64)
    return float(theta[0] / theta[1:3].mean())


class _SrmaObjective:
    def __init__(self, synth_pair, real_pair, theta_r, est, m, k, hist_seed, weights):
        self.synth_pair = synth_pair
        self.real_pair = real_pair
        self.est = est
        self.m, self.k, self.seed = m, k, hist_seed
        self.weights = weights
        self.p_r = self._histogram(real_pair, theta_r)
        self.flow_r = estimate_flow(*real_pair, est.with_theta(theta_r))

    def _histogram(self, pair, theta):
        cv = cost_volume(encode_features(pair[0], theta), encode_features(pair[1], theta), self.est.radius)
        return correlation_histogram(cv, self.m, self.k, self.seed)

    def parts(self, theta_s):
        kl = kl_divergence(self.p_r, self._histogram(self.synth_pair, theta_s))
        self_loss = flow_l1_loss(self.flow_r, estimate_flow(*self.real_pair, self.est.with_theta(theta_s)))
        value = self.weights.kl * kl + self.weights.self * self_loss
        if not np.isfinite(value):
            raise ArithmeticError(f"non-finite objective at theta_s={theta_s.tolist()}")
        return value, kl, self_loss


def run_srma(synth_pair, real_pair, theta_s0, theta_r0, lam=0.99, iters=20, step=0.05, seed=0,
             estimator=None, m=1000, k=10, weights=None, max_moves=100, callback=None):
    """Synthetic-to-real adaptation of the encoder parameters.

    Each iteration fixes the real-domain targets (histogram and flow under
    ``theta_r``), then repeatedly takes the best single-coordinate move of
    size ``step`` on ``theta_s`` while it lowers the objective (at most
    `max_moves` moves). ``theta_r`` then follows ``theta_s`` by EMA.
    Histograms of both domains share one sampling seed derived from `seed`.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if step <= 0:
        raise ValueError("step must be positive")
    estimator = estimator or EstimatorConfig()
    weights = weights or LossWeights()
    theta_s = check_theta(theta_s0).copy()
    theta_r = check_theta(theta_r0).copy()
    synth_pair = tuple(np.asarray(x, dtype=np.float64) for x in synth_pair)
    real_pair = tuple(np.asarray(x, dtype=np.float64) for x in real_pair)
    hist_seed = derive_seed(seed, "srma-histogram")

    trace = []
    for it in range(iters):
        obj = _SrmaObjective(synth_pair, real_pair, theta_r, estimator, m, k, hist_seed, weights)
        current, kl, self_loss = obj.parts(theta_s)
        start, kl_start = current, kl
        accepted = []
        while len(accepted) < max_moves:
            best = None
            for c in range(theta_s.size):
                for delta in (step, -step):
                    cand = theta_s.copy()
                    cand[c] += delta
                    if c < 3 and cand[c] <= 0:
                        continue
                    value, c_kl, c_self = obj.parts(cand)
                    if value < current and (best is None or value < best[0]):
                        best = (value, c_kl, c_self, cand)
            if best is None:
                break
            current, kl, self_loss, theta_s = best
            accepted.append(current)
        theta_r = ema_update(theta_r, theta_s, lam)
        record = SrmaTrace(it, kl_start, kl, self_loss, start, current, accepted,
                           theta_s.tolist(), theta_r.tolist())
        trace.append(record)
        if callback is not None:
            callback(record)
    return trace
