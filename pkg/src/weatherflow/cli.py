"""Command-line entry point: ``weatherflow <subcommand> [flags]``.

Every subcommand prints one JSON object on stdout. Inputs given by path are
read from disk; omitted inputs fall back to seeded built-in scenes, so each
command also runs with no files at all. Exit status: 0 success, 1 usage
error, 2 data error.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import io
from .adapt import StageError, relative_gain, run_cdma, run_srma
from .config import RunConfig, derive_seed, dumps
from .correlation import correlation_histogram, cost_volume, encode_features
from .degrade import synth_fog, synth_rain, transmission
from .estimator import estimate_flow
from .geometry import Pose, rigid_flow
from .losses import COMPONENTS, flow_l1_loss, kl_divergence, total_loss
from .metrics import evaluate, psnr
from .scenes import default_camera, depth_ramp, moving_square, srma_construct, stereo_sequence, textured_pattern
from .warp_error import edge_aware_sample, entropy_aware_sample, extract_patches, warp_error_map

SCENE_SHAPE = (64, 64)
# stereo sequences need room for well-separated positive and negative patches
SEQUENCE_SHAPE = (128, 128)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load(path, kind="image"):
    if kind == "flow":
        return io.read_flo(path).astype(np.float64)
    return io.read_image(path).astype(np.float64)


def _pair(args, cfg, name):
    """Two frames from --image1/--image2, or the built-in moving-square scene."""
    if (args.image1 is None) != (args.image2 is None):
        raise UsageError("--image1 and --image2 must be given together")
    if args.image1 is not None:
        return _load(args.image1), _load(args.image2), None
    return moving_square(SCENE_SHAPE, seed=derive_seed(cfg.seed, name) % (1 << 32))


def _flow_summary(flow):
    mag = np.hypot(flow[..., 0], flow[..., 1])
    return {"shape": list(flow.shape[:2]), "mean_u": flow[..., 0].mean(), "mean_v": flow[..., 1].mean(),
            "max_magnitude": mag.max()}


def cmd_synth_fog(args, cfg):
    img = _load(args.image) if args.image else textured_pattern(SCENE_SHAPE, derive_seed(cfg.seed, "synth-fog"))
    depth = _load(args.depth) if args.depth else depth_ramp(img.shape[:2], 0.5, 4.0)
    fog = cfg.fog
    if args.beta is not None:
        fog = replace(fog, beta=args.beta)
    out = synth_fog(img, depth, fog)
    if args.out:
        io.write_image(args.out, out)
    return {"beta": fog.beta, "atmospheric_light": fog.atmospheric_light, "psnr": psnr(out, img),
            "mean_transmission": transmission(depth, fog.beta).mean(), "shape": list(out.shape)}


def cmd_synth_rain(args, cfg):
    img = _load(args.image) if args.image else textured_pattern(SCENE_SHAPE, derive_seed(cfg.seed, "synth-rain"))
    rain = replace(cfg.rain, seed=derive_seed(cfg.seed, "synth-rain"))
    if args.streaks is not None:
        rain = replace(rain, streak_count=args.streaks)
    out, layer = synth_rain(img, rain)
    if args.out:
        io.write_image(args.out, out)
    if args.layer_out:
        io.write_pfm(args.layer_out, layer.astype(np.float32))
    return {"streak_count": rain.streak_count, "layer_mean": layer.mean(), "layer_max": layer.max(),
            "psnr": psnr(out, img), "shape": list(out.shape)}


def cmd_rigid_flow(args, cfg):
    depth = _load(args.depth) if args.depth else depth_ramp(SCENE_SHAPE, 4.0, 20.0)
    cam = cfg.camera_rig() or default_camera(depth.shape[:2])
    pose = cfg.camera_pose() or Pose(np.eye(3), np.array([0.0, 0.0, 0.4]))
    flow, valid = rigid_flow(depth, cam, pose)
    if args.out:
        io.write_flo(args.out, flow)
    return {**_flow_summary(flow), "valid_fraction": valid.mean()}


def cmd_estimate(args, cfg):
    i1, i2, gt = _pair(args, cfg, "estimate")
    flow = estimate_flow(i1, i2, cfg.estimator)
    if args.out:
        io.write_flo(args.out, flow)
    result = _flow_summary(flow)
    if gt is not None:
        result["builtin_epe"] = evaluate(flow, gt).epe
    return result


def cmd_warp_error(args, cfg):
    i1, i2, gt = _pair(args, cfg, "warp-error")
    if args.flow:
        flow = _load(args.flow, "flow")
    elif gt is not None:
        flow = gt
    else:
        flow = estimate_flow(i1, i2, cfg.estimator)
    w, oob = warp_error_map(i1, i2, flow)
    if args.out:
        io.write_pfm(args.out, w.astype(np.float32))
    return {"mean_abs": np.abs(w).mean(), "max_abs": np.abs(w).max(), "oob_fraction": oob.mean()}


def _rain_errors(cfg):
    """Warp errors of a clean pair and its rainy version under the true flow."""
    scene = stereo_sequence(SEQUENCE_SHAPE, seed=derive_seed(cfg.seed, "scene") % (1 << 32))
    x1, x2 = scene["left"]
    y1, _ = synth_rain(x1, replace(cfg.rain, seed=derive_seed(cfg.seed, "rain-t")), linear=True)
    y2, _ = synth_rain(x2, replace(cfg.rain, seed=derive_seed(cfg.seed, "rain-t1")), linear=True)
    w_x, _ = warp_error_map(x1, x2, scene["flow"])
    w_y, _ = warp_error_map(y1, y2, scene["flow"])
    return w_x, w_y


def cmd_sample_patches(args, cfg):
    if (args.clean_error is None) != (args.degraded_error is None):
        raise UsageError("--clean-error and --degraded-error must be given together")
    if args.clean_error:
        w_x, w_y = _load(args.clean_error), _load(args.degraded_error)
    else:
        w_x, w_y = _rain_errors(cfg)
    n, size = cfg.sampling.n, cfg.sampling.patch_size
    pos = edge_aware_sample(w_x, n, size, seed=derive_seed(cfg.seed, "edge-aware"))
    pos_y = extract_patches(w_y, pos.centers, size)
    neg = entropy_aware_sample(w_y, n, size, exclude=pos.centers)
    result = {"positives": pos.to_dict(), "positives_degraded": pos_y.to_dict(), "negatives": neg.to_dict()}
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(result) + "\n")
    summary = {"positives": len(pos), "negatives": len(neg), "positive_shortfall": pos.shortfall,
               "negative_shortfall": neg.shortfall}
    if len(pos):
        summary["mean_positive_cosine"] = np.einsum("jd,jd->j", pos.descriptors, pos_y.descriptors).mean()
        if len(neg):
            summary["mean_negative_cosine"] = (neg.descriptors @ pos.descriptors.T).mean()
    return summary


def _cost_volume(args, cfg, name):
    i1, i2, _ = _pair(args, cfg, name)
    theta = cfg.estimator.theta
    radius = args.radius or cfg.estimator.radius
    return cost_volume(encode_features(i1, theta), encode_features(i2, theta), radius)


def cmd_cost_volume(args, cfg):
    cv = _cost_volume(args, cfg, "cost-volume")
    size = 2 * cv.radius + 1
    best = cv.corr.reshape(*cv.shape, size * size).argmax(axis=-1)
    disp = cv.displacements()[best]
    if args.out:
        # (H, W, (2r+1)^2) float32 slab, displacement index dy-major
        io.write_pfm(args.out, cv.corr.reshape(cv.shape[0], -1).astype(np.float32))
    return {"shape": list(cv.shape), "radius": cv.radius, "mean": cv.corr[cv.valid].mean(),
            "valid_fraction": cv.valid.mean(), "mean_argmax_dx": disp[..., 0].mean(),
            "mean_argmax_dy": disp[..., 1].mean()}


def cmd_histogram(args, cfg):
    cv = _cost_volume(args, cfg, "histogram")
    hist = correlation_histogram(cv, cfg.histogram.m, cfg.histogram.k, derive_seed(cfg.seed, "histogram"))
    result = hist.to_dict()
    result["exact_probabilities"] = [f"{p.numerator}/{p.denominator}" for p in hist.exact_probabilities()]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(result) + "\n")
    return result


SEQUENCE_FLAGS = ("left1", "left2", "right1", "right2", "depth1", "depth2")


def _sequence(args, cfg, name):
    """Stereo sequence from the six path flags, or the built-in scene."""
    given = [getattr(args, f) is not None for f in SEQUENCE_FLAGS]
    if any(given):
        if not all(given):
            raise UsageError("--left1/--left2/--right1/--right2/--depth1/--depth2 must be given together")
        if cfg.pose is None:
            raise UsageError("a config with a 'pose' block is required for file inputs")
        g = {f: _load(getattr(args, f)) for f in SEQUENCE_FLAGS}
        return {"left": (g["left1"], g["left2"]), "right": (g["right1"], g["right2"]),
                "depth": (g["depth1"], g["depth2"]), "pose": cfg.camera_pose(),
                "cam": cfg.camera_rig() or default_camera(g["left1"].shape[:2])}
    return stereo_sequence(SEQUENCE_SHAPE, seed=derive_seed(cfg.seed, name) % (1 << 32),
                           cam=cfg.camera_rig(), pose=cfg.camera_pose())


def cmd_losses(args, cfg):
    scene = _sequence(args, cfg, "scene")
    report = run_cdma(scene["left"], scene["right"], scene["depth"], scene["pose"], scene["cam"], cfg=cfg)
    art = report.artifacts
    theta = cfg.estimator.theta
    h = cfg.histogram
    seed = derive_seed(cfg.seed, "histogram")

    def hist(pair):
        cv = cost_volume(encode_features(pair[0], theta), encode_features(pair[1], theta), cfg.estimator.radius)
        return correlation_histogram(cv, h.m, h.k, seed)

    # fog pair stands in for the synthetic domain, rain pair for the real one
    comps = {"pho": report.pho, "depth": report.depth, "geo": report.geo, "consis": report.consis,
             "contra": report.contra, "self": flow_l1_loss(art["flow_sd"], art["flow_ss"]),
             "kl": kl_divergence(hist(art["rain"]), hist(art["fog"]))}
    return {"components": comps, "order": list(COMPONENTS), "weights": cfg.weights.as_array(),
            "total": total_loss(comps, cfg.weights)}


def cmd_evaluate(args, cfg):
    flow = _load(args.flow, "flow")
    gt = _load(args.gt, "flow")
    valid = None
    if args.valid:
        valid = _load(args.valid) > 0.5
        if valid.ndim == 3:
            valid = valid.any(axis=-1)
    return evaluate(flow, gt, valid).to_dict()


def cmd_run_cdma(args, cfg):
    scene = _sequence(args, cfg, "scene")
    report = run_cdma(scene["left"], scene["right"], scene["depth"], scene["pose"], scene["cam"], cfg=cfg)
    result = report.to_dict()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(result) + "\n")
    return report.losses()


def cmd_run_srma(args, cfg):
    pair, theta_s0, theta_r0 = srma_construct(SCENE_SHAPE, seed=derive_seed(cfg.seed, "srma-scene") % (1 << 32))
    s = cfg.srma
    theta_s0 = s.theta_s0 if s.theta_s0 is not None else theta_s0
    theta_r0 = s.theta_r0 if s.theta_r0 is not None else theta_r0
    iters = args.iters or s.iters
    out = open(args.out, "w") if args.out else None
    try:
        def log(record):
            if out:
                out.write(dumps(record.to_dict()) + "\n")

        trace = run_srma(pair, pair, theta_s0, theta_r0, lam=cfg.ema_lambda, iters=iters, step=s.step,
                         seed=cfg.seed, estimator=cfg.estimator, m=cfg.histogram.m, k=cfg.histogram.k,
                         weights=cfg.weights, max_moves=s.max_moves, callback=log)
    finally:
        if out:
            out.close()
    last = trace[-1]
    return {"iterations": len(trace), "kl_initial": trace[0].kl_start, "kl_final": last.kl,
            "self_final": last.self_loss, "relative_gain": relative_gain(last.theta_s),
            "theta_s": last.theta_s, "theta_r": last.theta_r}


def build_parser():
    parser = _Parser(prog="weatherflow", description="Adverse-weather optical flow toolkit.")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output file")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    def pair_flags(p):
        p.add_argument("--image1", help="first frame (PGM/PPM/PFM)")
        p.add_argument("--image2", help="second frame (PGM/PPM/PFM)")

    p = add("synth-fog", cmd_synth_fog, "add depth-dependent fog to an image")
    p.add_argument("--image")
    p.add_argument("--depth", help="PFM depth map")
    p.add_argument("--beta", type=float)
    p = add("synth-rain", cmd_synth_rain, "add seeded rain streaks to an image")
    p.add_argument("--image")
    p.add_argument("--streaks", type=int)
    p.add_argument("--layer-out", help="write the streak layer as PFM")
    p = add("rigid-flow", cmd_rigid_flow, "rigid flow from depth, camera and pose (writes .flo)")
    p.add_argument("--depth", help="PFM depth map")
    p = add("estimate", cmd_estimate, "coarse-to-fine flow estimate (writes .flo)")
    pair_flags(p)
    p = add("warp-error", cmd_warp_error, "signed warp error I1 - I2(x + F) (writes PFM)")
    pair_flags(p)
    p.add_argument("--flow", help=".flo flow field")
    p = add("sample-patches", cmd_sample_patches, "edge-aware positives and entropy-aware negatives")
    p.add_argument("--clean-error", help="clean warp error (PFM)")
    p.add_argument("--degraded-error", help="degraded warp error (PFM)")
    p = add("cost-volume", cmd_cost_volume, "cosine cost volume summary (optional PFM slab)")
    pair_flags(p)
    p.add_argument("--radius", type=int)
    p = add("histogram", cmd_histogram, "smoothed correlation histogram")
    pair_flags(p)
    p.add_argument("--radius", type=int)

    def sequence_flags(p):
        for flag in SEQUENCE_FLAGS:
            p.add_argument(f"--{flag}", help="PFM depth" if flag.startswith("depth") else "image")

    sequence_flags(add("losses", cmd_losses, "all seven loss components and the weighted total"))
    p = add("evaluate", cmd_evaluate, "EPE and Fl-all of a flow against ground truth")
    p.add_argument("--flow", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--valid", help="PGM mask, nonzero = valid")
    sequence_flags(add("run-cdma", cmd_run_cdma, "clean-to-degraded loss report (JSON lines)"))
    p = add("run-srma", cmd_run_srma, "synthetic-to-real encoder adaptation trace (JSON lines)")
    p.add_argument("--iters", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        result = args.func(args, cfg)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, OSError, KeyError, TypeError, StageError) as err:
        print(f"weatherflow: error: {err}", file=sys.stderr)
        return 2
    print(dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
