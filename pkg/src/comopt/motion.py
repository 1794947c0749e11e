"""Rigid transforms and time-parameterized trajectories over [0, 1].

Every trajectory evaluates to the identity at t = 0: parts are modeled
in their initial world pose and the trajectory carries the motion away
from it. Angle ranges label poses; the applied rotation at time t is
the angle swept since t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid transform x -> R x + t in R^d (d = 2 or 3)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        d = t.shape[0]
        if R.shape != (d, d) or d not in (2, 3):
            raise ValueError(f"bad transform shapes {R.shape}, {t.shape}")
        if not np.allclose(R.T @ R, np.eye(d), atol=1e-9):
            raise ValueError("rotation matrix is not orthonormal")
        if not math.isclose(float(np.linalg.det(R)), 1.0, abs_tol=1e-9):
            raise ValueError("rotation matrix must have determinant +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity(d: int) -> "RigidTransform":
        return RigidTransform(np.eye(d), np.zeros(d))

    @staticmethod
    def rotation_2d(angle: float, pivot=(0.0, 0.0)) -> "RigidTransform":
        c, s = math.cos(angle), math.sin(angle)
        R = np.array([[c, -s], [s, c]])
        p = np.asarray(pivot, dtype=np.float64)
        return RigidTransform(R, p - R @ p)

    @staticmethod
    def rotation_3d(angle: float, axis, pivot=(0.0, 0.0, 0.0)) -> "RigidTransform":
        a = np.asarray(axis, dtype=np.float64)
        a = a / np.linalg.norm(a)
        K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
        R = np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)
        p = np.asarray(pivot, dtype=np.float64)
        return RigidTransform(R, p - R @ p)

    @staticmethod
    def translation_of(vec) -> "RigidTransform":
        v = np.asarray(vec, dtype=np.float64)
        return RigidTransform(np.eye(len(v)), v)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: (self @ other)(x) = self(other(x))."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -(Rt @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform points, shape (n, d) or (d,)."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def is_identity(self, tol: float = _ORTHO_TOL) -> bool:
        d = len(self.translation)
        return (np.abs(self.rotation - np.eye(d)).max() <= tol
                and np.abs(self.translation).max() <= tol)


def _check_time(t: float) -> float:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"trajectory time {t} outside [0, 1]")
    return float(t)


class Trajectory:
    """Base time-parameterized motion; subclasses define pose_delta."""

    d = 2

    def at(self, t: float) -> RigidTransform:
        raise NotImplementedError


class RotationTrajectory(Trajectory):
    """Rotation about a fixed pivot through an angle range.

    The part sits at the pose labeled ``theta_start``; at time t the
    applied transform is the rotation by t * (theta_end - theta_start)
    about the pivot, so the pivot is a fixed point for all t and
    at(0) is the identity.
    """

    def __init__(self, pivot, theta_start: float, theta_end: float, axis=None):
        self.pivot = tuple(float(x) for x in pivot)
        self.theta_start = float(theta_start)
        self.theta_end = float(theta_end)
        self.d = len(self.pivot)
        self.axis = None
        if self.d == 3:
            self.axis = tuple(float(x) for x in (axis if axis is not None
                                                 else (0.0, 0.0, 1.0)))

    def at(self, t: float) -> RigidTransform:
        t = _check_time(t)
        swept = t * (self.theta_end - self.theta_start)
        if self.d == 2:
            return RigidTransform.rotation_2d(swept, self.pivot)
        return RigidTransform.rotation_3d(swept, self.axis, self.pivot)


def follower_height(L: float, theta_c: float) -> float:
    """Vertical center position of the follower as a function of cam angle:
    3L/4 + (L/8) cos(2 theta_c)."""
    return 0.75 * L + 0.125 * L * math.cos(2.0 * theta_c)


class FollowerTrajectory(Trajectory):
    """Pure vertical translation coupled to a cam angle linear in t.

    The follower center height obeys ``follower_height``; the transform
    is the translation from the t = 0 height, so at(0) is the identity.
    """

    def __init__(self, L: float, theta_start: float, theta_end: float):
        if L <= 0:
            raise ValueError(f"domain length must be positive, got {L}")
        self.L = float(L)
        self.theta_start = float(theta_start)
        self.theta_end = float(theta_end)
        self.d = 2

    def cam_angle(self, t: float) -> float:
        return self.theta_start + t * (self.theta_end - self.theta_start)

    def at(self, t: float) -> RigidTransform:
        t = _check_time(t)
        dy = follower_height(self.L, self.cam_angle(t)) - \
            follower_height(self.L, self.theta_start)
        return RigidTransform.translation_of((0.0, dy))


class StaticTrajectory(Trajectory):
    """Identity for all t."""

    def __init__(self, d: int = 2):
        self.d = d

    def at(self, t: float) -> RigidTransform:
        _check_time(t)
        return RigidTransform.identity(self.d)


class KeyframeTrajectory(Trajectory):
    """Piecewise interpolation of keyframed poses.

    Keyframes are (t_k, transform) with strictly increasing t, t_0 = 0
    mapping to the identity, t_last = 1. Translation interpolates
    per-axis linearly; rotation by angle in 2D and along the axis-angle
    geodesic in 3D.
    """

    def __init__(self, keyframes):
        if len(keyframes) < 2:
            raise ValueError("keyframe trajectory needs at least 2 keyframes")
        times = [float(t) for t, _ in keyframes]
        if times[0] != 0.0 or times[-1] != 1.0:
            raise ValueError("keyframes must start at t=0 and end at t=1")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("keyframe times must be strictly increasing")
        if not keyframes[0][1].is_identity(1e-9):
            raise ValueError("keyframe at t=0 must be the identity transform")
        self.times = np.array(times)
        self.poses: list[RigidTransform] = [p for _, p in keyframes]
        self.d = len(self.poses[0].translation)

    def at(self, t: float) -> RigidTransform:
        t = _check_time(t)
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        k = min(k, len(self.poses) - 2)
        t0, t1 = self.times[k], self.times[k + 1]
        s = (t - t0) / (t1 - t0)
        a, b = self.poses[k], self.poses[k + 1]
        trans = (1.0 - s) * a.translation + s * b.translation
        if self.d == 2:
            ang_a = math.atan2(a.rotation[1, 0], a.rotation[0, 0])
            ang_b = math.atan2(b.rotation[1, 0], b.rotation[0, 0])
            dang = (ang_b - ang_a + math.pi) % (2.0 * math.pi) - math.pi
            ang = ang_a + s * dang
            c, si = math.cos(ang), math.sin(ang)
            R = np.array([[c, -si], [si, c]])
        else:
            from scipy.spatial.transform import Rotation, Slerp
            sl = Slerp([0.0, 1.0],
                       Rotation.from_matrix([a.rotation, b.rotation]))
            R = sl(s).as_matrix()
        return RigidTransform(R, trans)


class ComposedTrajectory(Trajectory):
    """outer(t) applied after inner(t); identity at 0 if both are."""

    def __init__(self, outer: Trajectory, inner: Trajectory):
        self.outer = outer
        self.inner = inner
        self.d = inner.d

    def at(self, t: float) -> RigidTransform:
        return self.outer.at(t).compose(self.inner.at(t))


@dataclass
class RelativeTrajectory:
    """Motion of part `moving` as seen from `observer`:
    tau_{i,j}(t) = tau_i(t)^-1 tau_j(t)."""

    observer: int
    moving: int
    observer_traj: Trajectory
    moving_traj: Trajectory

    def at(self, t: float) -> RigidTransform:
        return self.observer_traj.at(t).inverse().compose(self.moving_traj.at(t))

    def inverse(self) -> "RelativeTrajectory":
        return RelativeTrajectory(self.moving, self.observer,
                                  self.moving_traj, self.observer_traj)


def sample_uniform(rel, K: int) -> list[RigidTransform]:
    """Left-endpoint Riemann sampling: t_k = (k-1)/K for k = 1..K."""
    if K < 1:
        raise ValueError(f"step count must be >= 1, got {K}")
    return [rel.at((k - 1) / K) for k in range(1, K + 1)]
