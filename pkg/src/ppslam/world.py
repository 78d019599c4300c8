"""Ground-truth vehicle motion and synthetic measurements.

Random numbers come from numpy's PCG64 generator (``np.random.default_rng``)
seeded per run, so a ``(config, seed)`` pair reproduces every sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid
from .lie import Pose, is_rotation, skew, so3_exp


@dataclass(frozen=True)
class ScenarioConfig:
    omega_true: np.ndarray
    v_true: np.ndarray
    R0: np.ndarray
    P0: np.ndarray
    landmarks_true: np.ndarray
    bias_true: np.ndarray
    noise_std: float = 0.0
    duration: float = 40.0
    dt: float = 1e-3
    seed: int = 0
    feature_noise_std: float = 0.0

    def __post_init__(self):
        for name, shape in (("omega_true", (3,)), ("v_true", (3,)), ("R0", (3, 3)),
                            ("P0", (3,)), ("bias_true", (6,))):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise ConfigInvalid(f"{name} must have shape {shape}, got {a.shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        lm = np.array(self.landmarks_true, dtype=float)
        if lm.ndim != 2 or lm.shape[1] != 3:
            raise ConfigInvalid("landmarks_true must be an (n, 3) array")
        lm.setflags(write=False)
        object.__setattr__(self, "landmarks_true", lm)
        object.__setattr__(self, "seed", int(self.seed))
        self.validate()

    def validate(self) -> None:
        lm = self.landmarks_true
        if lm.shape[0] < 3:
            raise ConfigInvalid("at least three landmarks are required")
        if np.linalg.matrix_rank(lm[1:] - lm[0], tol=1e-9) < 2:
            raise ConfigInvalid("landmarks must not be collinear")
        if not is_rotation(self.R0):
            raise ConfigInvalid("R0 is not a rotation matrix")
        if not (self.dt > 0 and self.duration >= 0):
            raise ConfigInvalid("dt must be positive and duration non-negative")
        if self.noise_std < 0 or self.feature_noise_std < 0:
            raise ConfigInvalid("noise standard deviations must be non-negative")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigInvalid("seed must be an unsigned 64-bit integer")
        arrays = (self.omega_true, self.v_true, self.P0, lm, self.bias_true)
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ConfigInvalid("scenario values must be finite")

    @property
    def n(self) -> int:
        return self.landmarks_true.shape[0]

    @property
    def u_true(self) -> np.ndarray:
        return np.concatenate([self.omega_true, self.v_true])

    def to_dict(self) -> dict:
        return {
            "omega_true": self.omega_true.tolist(), "v_true": self.v_true.tolist(),
            "R0": self.R0.tolist(), "P0": self.P0.tolist(),
            "landmarks_true": self.landmarks_true.tolist(), "bias_true": self.bias_true.tolist(),
            "noise_std": self.noise_std, "feature_noise_std": self.feature_noise_std,
            "duration": self.duration, "dt": self.dt, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigInvalid(f"unknown scenario fields: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from None


@dataclass(frozen=True)
class TruthState:
    pose: Pose
    landmarks: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        lm = np.array(self.landmarks, dtype=float)
        lm.setflags(write=False)
        object.__setattr__(self, "landmarks", lm)

    @classmethod
    def initial(cls, cfg: ScenarioConfig) -> "TruthState":
        return cls(Pose(cfg.R0, cfg.P0), cfg.landmarks_true, 0.0)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def truth_step(s: TruthState, cfg: ScenarioConfig, dt: float) -> TruthState:
    """One Euler step of the constant-twist rigid-body motion; landmarks are static."""
    R, P = s.pose.rotation, s.pose.position
    P_new = P + dt * (R @ cfg.v_true)
    R_new = R @ so3_exp(cfg.omega_true * dt)
    return TruthState(Pose(R_new, P_new), s.landmarks, s.t + dt)


def measure_velocity(u_true, cfg: ScenarioConfig, rng: np.random.Generator | None = None):
    """Biased (and optionally noisy) group-velocity measurement."""
    u = np.asarray(u_true, dtype=float) + cfg.bias_true
    if cfg.noise_std > 0:
        if rng is None:
            raise ValueError("an rng is required when noise_std > 0")
        u = u + rng.normal(0.0, cfg.noise_std, 6)
    return u


def measure_landmarks(truth: TruthState, rng: np.random.Generator | None = None,
                      noise_std: float = 0.0) -> np.ndarray:
    """Body-frame landmark positions ``R^T (p_i - P)``."""
    R, P = truth.pose.rotation, truth.pose.position
    y = (truth.landmarks - P) @ R
    if noise_std > 0:
        if rng is None:
            raise ValueError("an rng is required when noise_std > 0")
        y = y + rng.normal(0.0, noise_std, y.shape)
    return y


def paper_scenario() -> ScenarioConfig:
    """Reference scenario: circular flight above four ground features.

    The matching observer defaults are bundled by :func:`ppslam.harness.paper_config`.
    """
    return ScenarioConfig(
        omega_true=[0.0, 0.0, 0.2],
        v_true=[1.8, 0.0, 0.0],
        R0=np.eye(3),
        P0=[0.0, 0.0, 3.0],
        landmarks_true=[[8.0, 8.0, 0.0], [-8.0, 8.0, 0.0], [8.0, -8.0, 0.0], [-8.0, -8.0, 0.0]],
        bias_true=[0.09, 0.1, -0.1, 0.2, 0.2, -0.2],
        noise_std=0.2,
        duration=40.0,
        dt=1e-3,
        seed=0,
    )


# --- closed-form reference trajectory --------------------------------------------

def closed_form_pose(cfg: ScenarioConfig, t: float) -> Pose:
    """Exact pose under the constant body twist at time ``t``."""
    phi = t * cfg.omega_true
    theta = math.sqrt(float(phi @ phi))
    K = skew(phi)
    if theta < 1e-8:
        J = np.eye(3) + 0.5 * K + (K @ K) / 6.0
    else:
        J = (np.eye(3) + ((1.0 - math.cos(theta)) / theta ** 2) * K
             + ((theta - math.sin(theta)) / theta ** 3) * (K @ K))
    R = cfg.R0 @ so3_exp(phi)
    P = cfg.P0 + cfg.R0 @ (J @ (t * cfg.v_true))
    return Pose(R, P)


@dataclass(frozen=True)
class Circle:
    center: np.ndarray
    normal: np.ndarray
    radius: float

    def distance(self, points) -> np.ndarray:
        d = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        h = d @ self.normal
        rho = np.linalg.norm(d - h[:, None] * self.normal, axis=1)
        return np.hypot(h, rho - self.radius)


def truth_circle(cfg: ScenarioConfig) -> Circle | None:
    """Circle traced by the true position, or ``None`` if the path is not planar."""
    w = float(np.linalg.norm(cfg.omega_true))
    if w == 0.0:
        return None
    axis = cfg.omega_true / w
    if abs(float(axis @ cfg.v_true)) > 1e-12 * max(1.0, float(np.linalg.norm(cfg.v_true))):
        return None
    center = cfg.P0 + cfg.R0 @ (np.cross(cfg.omega_true, cfg.v_true) / w ** 2)
    return Circle(center, cfg.R0 @ axis, float(np.linalg.norm(cfg.v_true)) / w)


def trajectory_distance(cfg: ScenarioConfig, t, points) -> np.ndarray:
    """Distance of ``points`` to the closed-form truth path.

    Point-to-circle distance for planar circular motion, otherwise the
    distance to the time-synchronized closed-form position.
    """
    circle = truth_circle(cfg)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if circle is not None:
        return circle.distance(points)
    t = np.atleast_1d(t)
    ref = np.array([closed_form_pose(cfg, float(ti)).position for ti in t])
    return np.linalg.norm(points - ref, axis=1)
