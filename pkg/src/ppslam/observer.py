"""Guaranteed-performance SLAM observer (matrix and quaternion backends).

The per-step work is done by a kernel from :mod:`ppslam._backend`; the
functions ``correction_twist``, ``bias_rate``, ``landmark_rate`` and
``pose_rate`` are reference implementations of the individual observer
terms written directly from their block-matrix form.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from .constants import LAMBDA_FLOOR
from .errors import ConfigInvalid, EnvelopeViolation, GainConditionWarning, SingularLambda
from .lie import (QUAT_IDENTITY, Pose, aug_adjoint, pose_inverse, quat_normalize,
                  quat_to_rotation, skew, wedge)
from .ppf import PerformanceEnvelope, envelope_at, envelope_rate

INTEGRATORS = {"euler": _backend.MODE_EULER, "imex": _backend.MODE_IMEX}


@dataclass(frozen=True)
class ObserverGains:
    k_p: float
    k_w: float
    Gamma: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        G = np.array(self.Gamma, dtype=float)
        if G.ndim == 0:
            G = float(G) * np.eye(6)
        a = np.atleast_1d(np.array(self.alpha, dtype=float))
        G.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "k_p", float(self.k_p))
        object.__setattr__(self, "k_w", float(self.k_w))
        self.validate()

    def validate(self) -> None:
        if not (self.k_p > 0 and self.k_w > 0):
            raise ConfigInvalid("k_p and k_w must be positive")
        if self.Gamma.shape != (6, 6) or not np.allclose(self.Gamma, self.Gamma.T, atol=1e-12):
            raise ConfigInvalid("Gamma must be a symmetric 6x6 matrix")
        try:
            np.linalg.cholesky(self.Gamma)
        except np.linalg.LinAlgError:
            raise ConfigInvalid("Gamma must be positive definite") from None
        if np.any(self.alpha <= 0) or not np.all(np.isfinite(self.alpha)):
            raise ConfigInvalid("alpha entries must be positive")

    @classmethod
    def paper(cls, n: int = 4) -> "ObserverGains":
        return cls(k_p=3.0, k_w=3.0, Gamma=10.0 * np.eye(6), alpha=np.full(n, 0.05))

    def for_landmarks(self, n: int) -> "ObserverGains":
        """Broadcast a scalar alpha to ``n`` landmarks."""
        if self.alpha.size == n:
            return self
        if self.alpha.size == 1:
            return replace(self, alpha=np.full(n, self.alpha[0]))
        raise ConfigInvalid(f"alpha has {self.alpha.size} entries for {n} landmarks")

    def to_dict(self) -> dict:
        return {"k_p": self.k_p, "k_w": self.k_w, "Gamma": self.Gamma.tolist(),
                "alpha": self.alpha.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ObserverGains":
        try:
            return cls(k_p=d["k_p"], k_w=d["k_w"], Gamma=np.asarray(d["Gamma"], dtype=float),
                       alpha=np.asarray(d["alpha"], dtype=float))
        except KeyError as exc:
            raise ConfigInvalid(f"gains missing field {exc}") from None


@dataclass(frozen=True)
class ObserverState:
    """Estimated pose, landmarks and velocity bias.

    With ``quaternion`` set the attitude is carried as a unit quaternion and
    ``pose_est.rotation`` is derived from it.
    """

    pose_est: Pose
    landmark_est: np.ndarray
    bias_est: np.ndarray = field(default_factory=lambda: np.zeros(6))
    quaternion: np.ndarray | None = None

    def __post_init__(self):
        lm = np.array(self.landmark_est, dtype=float).reshape(-1, 3)
        b = np.array(self.bias_est, dtype=float).reshape(6)
        lm.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "landmark_est", lm)
        object.__setattr__(self, "bias_est", b)
        if self.quaternion is not None:
            Q = np.array(self.quaternion, dtype=float).reshape(4)
            Q.setflags(write=False)
            object.__setattr__(self, "quaternion", Q)

    @property
    def n(self) -> int:
        return self.landmark_est.shape[0]

    @property
    def backend(self) -> str:
        return "matrix" if self.quaternion is None else "quaternion"

    @classmethod
    def initial(cls, n: int, rotation=None, position=None, landmarks=None, bias=None,
                quaternion: bool = False) -> "ObserverState":
        """Default start: identity pose, landmarks at the origin, zero bias."""
        R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        P = np.zeros(3) if position is None else position
        lm = np.zeros((n, 3)) if landmarks is None else landmarks
        b = np.zeros(6) if bias is None else bias
        Q = None
        if quaternion:
            from .lie import rotation_to_quat
            Q = QUAT_IDENTITY.copy() if rotation is None else rotation_to_quat(R)
            R = quat_to_rotation(Q)
        return cls(Pose(R, P), lm, b, Q)


@dataclass(frozen=True)
class MeasurementFrame:
    """Biased velocity ``u_m`` and body-frame feature positions ``y`` at time ``t``."""

    u_m: np.ndarray
    y: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.array(self.u_m, dtype=float).reshape(6)
        y = np.array(self.y, dtype=float).reshape(-1, 3)
        if y.shape[0] < 3:
            raise ValueError("at least three feature measurements are required")
        object.__setattr__(self, "u_m", u)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class ErrorDiagnostics:
    t: float
    e: np.ndarray
    E: np.ndarray
    Lambda: np.ndarray          # diagonals, (n, 3)
    xi: np.ndarray
    W: np.ndarray
    lyapunov: float | None = None
    R_tilde: np.ndarray | None = None
    P_tilde: np.ndarray | None = None
    b_tilde: np.ndarray | None = None


# --- reference observer terms ------------------------------------------------

def _lam_diag(lam, E) -> np.ndarray:
    """Diagonals of ``Lambda``, given either as diagonals or as 3x3 matrices.

    The form is read off the rank relative to ``E``: one extra axis means
    matrices.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == np.ndim(E) + 1:
        return np.diagonal(lam, axis1=-2, axis2=-1)
    return lam


def _stack(pose_est: Pose, y_i) -> np.ndarray:
    """6x3 factor ``[[R y_i + P]x ; I3]``."""
    return np.vstack([skew(pose_est.rotation @ y_i + pose_est.position), np.eye(3)])


def landmark_error(pose_est: Pose, p_hat_i, y_i) -> np.ndarray:
    """``p_hat_i - (R_hat y_i + P_hat)``; works row-wise on ``(n, 3)`` input."""
    return np.asarray(p_hat_i, dtype=float) - pose_est.apply(y_i)


def correction_twist(pose_est: Pose, lam, E, y, k_w: float) -> np.ndarray:
    lam = np.atleast_2d(_lam_diag(lam, E))
    E = np.atleast_2d(np.asarray(E, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    ad_inv = aug_adjoint(pose_inverse(pose_est))
    W = np.zeros(6)
    for i in range(y.shape[0]):
        W -= k_w * ad_inv @ _stack(pose_est, y[i]) @ (lam[i] * E[i])
    return W


def bias_rate(pose_est: Pose, lam, E, y, gains: ObserverGains) -> np.ndarray:
    lam = np.atleast_2d(_lam_diag(lam, E))
    E = np.atleast_2d(np.asarray(E, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    alpha = np.broadcast_to(gains.alpha, (y.shape[0],))
    adT = aug_adjoint(pose_est).T
    rate = np.zeros(6)
    for i in range(y.shape[0]):
        rate -= (gains.Gamma / alpha[i]) @ adT @ _stack(pose_est, y[i]) @ (lam[i] * E[i])
    return rate


def landmark_rate(lam_i, E_i, k_p: float) -> np.ndarray:
    lam_i = _lam_diag(lam_i, E_i)
    if np.any(lam_i < LAMBDA_FLOOR):
        raise SingularLambda("Lambda has a vanishing diagonal entry")
    return -k_p * (lam_i + 1.0 / lam_i) * np.asarray(E_i, dtype=float)


def pose_rate(pose_est: Pose, u_m, bias_est, W) -> np.ndarray:
    """Time derivative of the 4x4 estimated pose."""
    u = np.asarray(u_m, dtype=float) - np.asarray(bias_est, dtype=float) - np.asarray(W, dtype=float)
    return pose_est.matrix() @ wedge(u)


def lyapunov_value(E, b_tilde, gains: ObserverGains) -> float:
    E = np.atleast_2d(np.asarray(E, dtype=float))
    alpha = np.broadcast_to(gains.alpha, (E.shape[0],))
    b = np.asarray(b_tilde, dtype=float)
    return float(np.sum(np.sum(E * E, axis=1) / (2.0 * alpha))
                 + 0.5 * b @ np.linalg.solve(gains.Gamma, b))


def pose_error(truth: Pose, est: Pose) -> tuple[np.ndarray, np.ndarray]:
    """``T_tilde = T_hat T^-1`` as ``(R_tilde, P_tilde)``."""
    R_t = est.rotation @ truth.rotation.T
    return R_t, est.position - R_t @ truth.position


def check_gain_condition(gains: ObserverGains, env: PerformanceEnvelope) -> bool:
    """Check ``k_p > max(delta_bar) * max(xi0) * |min mu|`` and warn if it fails.

    The condition is sufficient, not necessary; the reference scenario
    violates it and still converges.
    """
    mu0 = envelope_rate(env, 0.0) / envelope_at(env, 0.0)
    bound = float(np.max(env.delta_bar) * np.max(env.xi0) * abs(np.min(mu0)))
    ok = gains.k_p > bound
    if not ok:
        warnings.warn(f"k_p = {gains.k_p:g} does not exceed {bound:.4g}; "
                      "the Lyapunov decrease bound is not guaranteed", GainConditionWarning,
                      stacklevel=2)
    return ok


# --- stepping ------------------------------------------------------------------

def _kernel_args(state: ObserverState, frame: MeasurementFrame, envs: PerformanceEnvelope,
                 gains: ObserverGains):
    n = state.n
    if frame.y.shape[0] != n:
        raise ValueError(f"{frame.y.shape[0]} measurements for {n} landmarks")
    rot = state.quaternion if state.quaternion is not None else state.pose_est.rotation
    xi = np.broadcast_to(envelope_at(envs, frame.t), (n, 3))
    dbar = np.ascontiguousarray(np.broadcast_to(envs.delta_bar, (n, 3)))
    dund = np.ascontiguousarray(np.broadcast_to(envs.delta_under, (n, 3)))
    alpha = np.ascontiguousarray(np.broadcast_to(gains.alpha, (n,)))
    return (np.ascontiguousarray(rot, dtype=float), np.ascontiguousarray(state.pose_est.position),
            np.ascontiguousarray(state.landmark_est), np.ascontiguousarray(state.bias_est),
            frame.u_m, frame.y, np.ascontiguousarray(xi), dbar, dund,
            gains.k_p, gains.k_w, np.ascontiguousarray(gains.Gamma), alpha)


def _diagnostics(state, frame, xi, e, E, lam, W, gains, truth, bias_true):
    lyap = R_t = P_t = b_t = None
    if bias_true is not None:
        b_t = np.asarray(bias_true, dtype=float) - state.bias_est
        lyap = lyapunov_value(E, b_t, gains)
    if truth is not None:
        R_t, P_t = pose_error(truth, state.pose_est)
    return ErrorDiagnostics(frame.t, e, E, lam, np.array(xi), W, lyap, R_t, P_t, b_t)


def _run_kernel(state, frame, envs, gains, dt, mode, kernel, truth, bias_true):
    args = _kernel_args(state, frame, envs, gains)
    kern = _backend.get_kernel(kernel)
    rot, P, phat, bhat, e, E, lam, W, status = kern(*args, float(dt), mode)
    if status >= 0:
        i, k = divmod(int(status), 3)
        ratio = float(e[i, k] / args[6][i, k])
        exc = EnvelopeViolation(
            f"landmark {i} axis {k} left its envelope at t={frame.t:.6g} (e/xi = {ratio:.6g})",
            index=(i, k), t=frame.t, ratio=ratio)
        exc.state = state
        raise exc
    diag = _diagnostics(state, frame, args[6], e, E, lam, W, gains, truth, bias_true)
    if mode == _backend.MODE_EVAL:
        return state, diag
    if state.quaternion is not None:
        Q = np.asarray(rot)
        new = ObserverState(Pose(quat_to_rotation(Q), P), phat, bhat, Q)
    else:
        new = ObserverState(Pose(rot, P), phat, bhat)
    return new, diag


def evaluate(state: ObserverState, frame: MeasurementFrame, envs: PerformanceEnvelope,
             gains: ObserverGains, *, kernel: str | None = None, truth: Pose | None = None,
             bias_true=None) -> ErrorDiagnostics:
    """Errors, transformed errors and correction at the current instant."""
    return _run_kernel(state, frame, envs, gains, 0.0, _backend.MODE_EVAL, kernel,
                       truth, bias_true)[1]


def step(state: ObserverState, frame: MeasurementFrame, envs: PerformanceEnvelope,
         gains: ObserverGains, dt: float, *, integrator: str = "imex",
         kernel: str | None = None, truth: Pose | None = None,
         bias_true=None) -> tuple[ObserverState, ErrorDiagnostics]:
    """Advance the matrix-backend observer by ``dt``.

    ``integrator="euler"`` is the explicit first-order step; ``"imex"`` keeps
    the measured motion explicit and treats the correction terms with a
    linearized implicit Euler step (still first order, but stable for the
    stiff feedback gains used in practice). Diagnostics describe the state
    *before* the update. Raises :class:`EnvelopeViolation` with the
    offending state attached as ``exc.state``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.quaternion is not None:
        raise ValueError("state carries a quaternion; use quaternion_step")
    try:
        mode = INTEGRATORS[integrator]
    except KeyError:
        raise ValueError(f"unknown integrator {integrator!r}") from None
    return _run_kernel(state, frame, envs, gains, dt, mode, kernel, truth, bias_true)


def quaternion_step(qstate: ObserverState, frame: MeasurementFrame, envs: PerformanceEnvelope,
                    gains: ObserverGains, dt: float, *, integrator: str = "imex",
                    kernel: str | None = None, truth: Pose | None = None,
                    bias_true=None) -> tuple[ObserverState, ErrorDiagnostics]:
    """Quaternion-backend counterpart of :func:`step`.

    Attitude advances as ``Q <- Q (.) exp(chi dt / 2)``, the exact flow of
    ``Q_dot = 0.5 * Q (.) [0, chi]`` for constant ``chi``, and is
    renormalized afterwards.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if qstate.quaternion is None:
        raise ValueError("state has no quaternion; use step")
    qstate = replace(qstate, quaternion=quat_normalize(qstate.quaternion))
    try:
        mode = INTEGRATORS[integrator]
    except KeyError:
        raise ValueError(f"unknown integrator {integrator!r}") from None
    return _run_kernel(qstate, frame, envs, gains, dt, mode, kernel, truth, bias_true)


def advance(state: ObserverState, frame, envs, gains, dt, **kw):
    """Dispatch to :func:`step` or :func:`quaternion_step` by backend."""
    fn = quaternion_step if state.quaternion is not None else step
    return fn(state, frame, envs, gains, dt, **kw)
