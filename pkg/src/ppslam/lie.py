"""Rotation, rigid-body pose and quaternion primitives.

Conventions
-----------
* A twist is a 6-vector ``[omega; v]`` (angular first, then translational).
* A pose ``T = [[R, P], [0, 1]]`` maps body-frame points to the inertial frame.
* A unit quaternion is ``[q0, q1, q2, q3]`` with the scalar part first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import SMALL_ANGLE, TOL_ANTISYM, TOL_ORTHO, TOL_QUAT_INPUT
from .errors import DegenerateMatrix, NonAntisymmetric, NonUnitQuaternion

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def skew(y) -> np.ndarray:
    """Matrix ``[y]x`` such that ``skew(y) @ z == cross(y, z)``."""
    y1, y2, y3 = (float(c) for c in y)
    return np.array([[0.0, -y3, y2],
                     [y3, 0.0, -y1],
                     [-y2, y1, 0.0]])


def vee(M) -> np.ndarray:
    """Inverse of :func:`skew`."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3) or np.linalg.norm(M + M.T) >= TOL_ANTISYM:
        raise NonAntisymmetric("matrix is not antisymmetric")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def wedge(u) -> np.ndarray:
    """4x4 se(3) matrix of a twist ``[omega; v]``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = skew(u[:3])
    out[:3, 3] = u[3:6]
    return out


def so3_exp(w) -> np.ndarray:
    """Rotation ``exp([w]x)`` via the Rodrigues formula."""
    w = np.asarray(w, dtype=float)
    theta = math.sqrt(float(w @ w))
    K = skew(w)
    if theta < SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * (K @ K)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def is_rotation(R, tol: float = TOL_ORTHO) -> bool:
    R = np.asarray(R, dtype=float)
    return (R.shape == (3, 3)
            and bool(np.all(np.isfinite(R)))
            and np.linalg.norm(R @ R.T - np.eye(3)) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol)


def project_to_rotation(M) -> np.ndarray:
    """Nearest rotation to ``M`` in the Frobenius norm (polar factor via SVD)."""
    M = np.asarray(M, dtype=float)
    if np.linalg.det(M) <= 0.0:
        raise DegenerateMatrix("cannot project a matrix with det <= 0 onto SO(3)")
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


@dataclass(frozen=True)
class Pose:
    """Element of SE(3): attitude ``rotation`` and inertial ``position``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        P = np.array(self.position, dtype=float).reshape(3)
        R.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "position", P)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_matrix(cls, T) -> "Pose":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T

    def is_valid(self, tol: float = TOL_ORTHO) -> bool:
        return is_rotation(self.rotation, tol) and bool(np.all(np.isfinite(self.position)))

    def apply(self, p) -> np.ndarray:
        """Map body-frame point(s) into the inertial frame."""
        return np.asarray(p, dtype=float) @ self.rotation.T + self.position

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.position + self.position)


def pose_inverse(T: Pose) -> Pose:
    Rt = T.rotation.T
    return Pose(Rt, -Rt @ T.position)


def aug_adjoint(T: Pose) -> np.ndarray:
    """6x6 matrix ``[[R, 0], [[P]x R, R]]`` acting on ``[omega; v]`` twists."""
    R = T.rotation
    out = np.zeros((6, 6))
    out[:3, :3] = R
    out[3:, 3:] = R
    out[3:, :3] = skew(T.position) @ R
    return out


def homogeneous(p, w: float = 1.0) -> np.ndarray:
    """Append the homogeneous coordinate ``w`` (1 for points, 0 for directions)."""
    p = np.asarray(p, dtype=float)
    pad = np.full(p.shape[:-1] + (1,), float(w))
    return np.concatenate([p, pad], axis=-1)


@dataclass(frozen=True)
class SlamState:
    """A pose together with ``n >= 3`` inertial landmark positions."""

    pose: Pose
    landmarks: np.ndarray

    def __post_init__(self):
        lm = np.array(self.landmarks, dtype=float)
        if lm.ndim != 2 or lm.shape[1] != 3 or lm.shape[0] < 3:
            raise ValueError("SlamState needs an (n, 3) landmark array with n >= 3")
        lm.setflags(write=False)
        object.__setattr__(self, "landmarks", lm)

    @property
    def n(self) -> int:
        return self.landmarks.shape[0]

    def homogeneous_landmarks(self) -> np.ndarray:
        return homogeneous(self.landmarks, 1.0)


# --- unit quaternions -------------------------------------------------------

def _check_unit(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (4,) or abs(math.sqrt(float(Q @ Q)) - 1.0) > TOL_QUAT_INPUT:
        raise NonUnitQuaternion(f"quaternion norm {np.linalg.norm(Q)!r} is not 1")
    return Q


def quat_normalize(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    return Q / math.sqrt(float(Q @ Q))


def quat_inverse(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    return np.array([Q[0], -Q[1], -Q[2], -Q[3]])


def _qmul(Q1, Q2) -> np.ndarray:
    q01, q1 = Q1[0], Q1[1:]
    q02, q2 = Q2[0], Q2[1:]
    return np.concatenate([[q01 * q02 - q1 @ q2],
                           q01 * q2 + q02 * q1 + np.cross(q1, q2)])


def quat_multiply(Q1, Q2) -> np.ndarray:
    """Hamilton product ``Q1 (.) Q2``, renormalized."""
    return quat_normalize(_qmul(_check_unit(Q1), _check_unit(Q2)))


def quat_to_rotation(Q) -> np.ndarray:
    Q = _check_unit(Q)
    q0, q = Q[0], Q[1:]
    return (q0 * q0 - q @ q) * np.eye(3) + 2.0 * np.outer(q, q) + 2.0 * q0 * skew(q)


def quat_rotate(Q, x) -> np.ndarray:
    """Vector part of ``Q (.) [0, x] (.) Q^-1``."""
    Q = _check_unit(Q)
    x = np.asarray(x, dtype=float)
    return _qmul(_qmul(Q, np.concatenate([[0.0], x])), quat_inverse(Q))[1:]


def quat_exp(w) -> np.ndarray:
    """Unit quaternion of the rotation vector ``w`` (same rotation as so3_exp)."""
    w = np.asarray(w, dtype=float)
    theta = math.sqrt(float(w @ w))
    if theta < SMALL_ANGLE:
        return quat_normalize(np.concatenate([[1.0 - theta * theta / 8.0], 0.5 * w]))
    half = 0.5 * theta
    return np.concatenate([[math.cos(half)], (math.sin(half) / theta) * w])


def rotation_to_quat(R) -> np.ndarray:
    """Unit quaternion with non-negative scalar part for a rotation matrix."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0.0:
        s = 2.0 * math.sqrt(tr + 1.0)
        Q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        Q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        Q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        Q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    Q = quat_normalize(Q)
    return Q if Q[0] >= 0.0 else -Q
