"""Run configuration, seed derivation and JSON output helpers."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .degrade import FogParams, RainParams
from .estimator import EstimatorConfig
from .geometry import CameraRig, Pose
from .losses import LossWeights, SparseNormParams
from .warp_error import DEFAULT_PATCH_SIZE

MASK64 = (1 << 64) - 1
SIG_DIGITS = 9


def splitmix64(x):
    """One step of the SplitMix64 output function."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed, name):
    """Sub-seed for the stage `name`: SplitMix64 of the seed xor a name hash."""
    tag = int.from_bytes(hashlib.blake2b(name.encode(), digest_size=8).digest(), "little")
    return splitmix64((int(seed) & MASK64) ^ tag)


@dataclass
class SamplingConfig:
    n: int = 100
    patch_size: int = DEFAULT_PATCH_SIZE


@dataclass
class HistogramConfig:
    m: int = 1000
    k: int = 10


@dataclass
class SrmaConfig:
    iters: int = 10
    step: float = 0.05
    max_moves: int = 100
    # None selects the built-in gain-x2 construct
    theta_s0: list | None = None
    theta_r0: list | None = None


@dataclass
class RunConfig:
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    fog: FogParams = field(default_factory=FogParams)
    rain: RainParams = field(default_factory=RainParams)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    histogram: HistogramConfig = field(default_factory=HistogramConfig)
    srma: SrmaConfig = field(default_factory=SrmaConfig)
    ema_lambda: float = 0.99
    alpha1: float = 0.01
    alpha2: float = 0.5
    tau: float = 0.07
    norm: SparseNormParams = field(default_factory=SparseNormParams)
    camera: dict | None = None
    pose: dict | None = None

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        nested = {
            "weights": LossWeights, "fog": FogParams, "rain": RainParams, "estimator": EstimatorConfig,
            "sampling": SamplingConfig, "histogram": HistogramConfig, "srma": SrmaConfig,
            "norm": SparseNormParams,
        }
        kwargs = {}
        for key, value in data.items():
            if key in nested:
                value = nested[key](**_tupled(value))
            kwargs[key] = value
        cfg = cls(**kwargs)
        # validate eagerly so bad geometry fails at load time
        cfg.camera_rig()
        cfg.camera_pose()
        if not 0.0 <= cfg.ema_lambda <= 1.0:
            raise ValueError("ema_lambda must lie in [0, 1]")
        if cfg.tau <= 0:
            raise ValueError("tau must be positive")
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def camera_rig(self):
        return CameraRig.from_dict(self.camera) if self.camera is not None else None

    def camera_pose(self):
        return Pose.from_dict(self.pose) if self.pose is not None else None

    def with_seed(self, seed):
        return replace(self, seed=int(seed), rain=replace(self.rain, seed=int(seed)))

    def to_dict(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, EstimatorConfig):
                value = value.to_dict()
            elif hasattr(value, "__dataclass_fields__"):
                value = asdict(value)
            out[f.name] = value
        return out


def _tupled(block):
    # JSON has no tuples; range fields arrive as lists
    return {k: tuple(v) if isinstance(v, list) and k != "theta" else v for k, v in block.items()}


def _round(value):
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    if isinstance(value, np.ndarray):
        return _round(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not np.isfinite(value):
            return None if np.isnan(value) else ("inf" if value > 0 else "-inf")
        return float(f"{value:.{SIG_DIGITS}g}")
    return value


def dumps(obj):
    """Compact JSON with floats rounded to 9 significant digits."""
    return json.dumps(_round(obj), sort_keys=True, separators=(",", ":"))
