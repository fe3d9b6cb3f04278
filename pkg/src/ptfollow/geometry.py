"""Frame math for a pan-tilt camera mounted on a differential-drive robot.

Coordinate conventions used throughout the package:

World frame
    X/Y span the ground plane, Z points up.

Robot frame
    Origin at the midpoint of the wheel axis, X forward, Y left, Z up.
    The planar pose is ``(x, y, theta)`` with ``theta`` measured
    counter-clockwise from world +X.

Camera frame
    Standard image convention: X right in the image, Y down, Z along the
    optical axis.  The camera sits on the pan-tilt unit directly above the
    robot origin at a configured height, so rotations of the base or of the
    joints never translate the optical center.

Joint angles
    ``alpha`` (pan) is positive when the camera turns left (counter-clockwise
    seen from above).  ``beta`` (tilt) is positive when the optical axis rises
    above the horizon.  At ``alpha = beta = 0`` the optical axis coincides
    with the robot forward axis, the image u-axis points to the robot's
    right and the image v-axis points down.

Vertical offsets
    Heights relative to the camera are expressed in the camera's down-positive
    sense: a point *above* the optical center has a *negative* offset.  This
    keeps the depth-from-height formula positive for physically consistent
    inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class JointLimitError(ValueError):
    """Pan or tilt angle outside the configured joint range."""


class BehindCameraError(ValueError):
    """Projection requested for a point at or behind the optical center."""


class DepthUnobservableError(ValueError):
    """Depth recovery is degenerate: the measured row is too close to the
    horizon line for the current tilt."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters, all in pixels."""

    alpha_x: float = 500.0
    alpha_y: float = 500.0
    u0: float = 320.0
    v0: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self) -> None:
        if self.alpha_x <= 0 or self.alpha_y <= 0:
            raise ValueError("intrinsics: focal scales alpha_x/alpha_y must be > 0")
        if not (0 <= self.u0 < self.width):
            raise ValueError("intrinsics: u0 must lie in [0, width)")
        if not (0 <= self.v0 < self.height):
            raise ValueError("intrinsics: v0 must lie in [0, height)")


@dataclass(frozen=True)
class CameraPoint:
    """Point in the camera frame, meters.  ``z`` is optical-axis depth."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class PanTiltAngles:
    """Pan/tilt joint angles in radians."""

    alpha: float = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class JointLimits:
    """Symmetric joint range; defaults give the full useful envelope of a
    typical pan-tilt unit."""

    alpha_max: float = math.pi / 2
    beta_max: float = math.pi / 3

    def check(self, angles: PanTiltAngles) -> None:
        if abs(angles.alpha) > self.alpha_max:
            raise JointLimitError(
                f"pan angle {angles.alpha:.4f} exceeds limit +/-{self.alpha_max:.4f}"
            )
        if abs(angles.beta) > self.beta_max:
            raise JointLimitError(
                f"tilt angle {angles.beta:.4f} exceeds limit +/-{self.beta_max:.4f}"
            )

    def clamp(self, angles: PanTiltAngles) -> PanTiltAngles:
        return PanTiltAngles(
            alpha=min(max(angles.alpha, -self.alpha_max), self.alpha_max),
            beta=min(max(angles.beta, -self.beta_max), self.beta_max),
        )


DEFAULT_JOINT_LIMITS = JointLimits()

# Robot axes expressed in camera coordinates at alpha = beta = 0:
# X_r -> Z_c (forward onto optical axis), Y_r -> -X_c, Z_r -> -Y_c.
_BASE_ALIGNMENT = np.array(
    [
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
    ]
)


def rotation_camera_from_robot(
    angles: PanTiltAngles, limits: JointLimits = DEFAULT_JOINT_LIMITS
) -> np.ndarray:
    """Rotation taking robot-frame coordinates to camera-frame coordinates.

    Composition: base alignment, then pan about the vertical axis, then tilt
    about the camera lateral axis.  The returned matrix is orthonormal with
    determinant +1.

    Raises:
        JointLimitError: if either angle is outside ``limits``.
    """
    limits.check(angles)
    sa, ca = math.sin(angles.alpha), math.cos(angles.alpha)
    sb, cb = math.sin(angles.beta), math.cos(angles.beta)
    # Closed form of Rx(beta)^T @ Ry(-alpha)^T @ base alignment; rows are the
    # camera axes expressed in the robot frame.
    return np.array(
        [
            [sa, -ca, 0.0],
            [sb * ca, sb * sa, -cb],
            [cb * ca, cb * sa, sb],
        ]
    )


def camera_motion(
    angles: PanTiltAngles,
    v_r: float,
    omega_r: float,
    omega_alpha: float,
    omega_beta: float,
    limits: JointLimits = DEFAULT_JOINT_LIMITS,
) -> tuple[np.ndarray, np.ndarray]:
    """Linear and angular velocity of the camera, in camera coordinates.

    The base contributes forward speed ``v_r`` along robot X; base yaw and pan
    both rotate about the vertical axis, the tilt rate rotates about the
    camera lateral axis.
    """
    rot = rotation_camera_from_robot(angles, limits)
    v_c = rot @ np.array([v_r, 0.0, 0.0])
    w_c = rot @ np.array([0.0, 0.0, omega_r + omega_alpha])
    w_c[0] += omega_beta
    return v_c, w_c


def point_velocity(
    p: CameraPoint,
    angles: PanTiltAngles,
    v_r: float,
    omega_r: float,
    omega_alpha: float,
    omega_beta: float,
) -> np.ndarray:
    """Apparent velocity of a static world point seen from the moving camera:
    ``-v_c - w_c x p``."""
    v_c, w_c = camera_motion(angles, v_r, omega_r, omega_alpha, omega_beta)
    return -v_c - np.cross(w_c, p.as_array())


def point_velocity_expanded(
    p: CameraPoint,
    angles: PanTiltAngles,
    v_r: float,
    omega_r: float,
    omega_alpha: float,
    omega_beta: float,
) -> np.ndarray:
    """Component-wise expansion of :func:`point_velocity`.

    Kept as an independent closed form so the matrix construction and the
    hand expansion can be checked against each other.
    """
    sa, ca = math.sin(angles.alpha), math.cos(angles.alpha)
    sb, cb = math.sin(angles.beta), math.cos(angles.beta)
    w = omega_alpha + omega_r
    return np.array(
        [
            -v_r * sa + w * cb * p.z + w * sb * p.y,
            -v_r * ca * sb - w * sb * p.x + omega_beta * p.z,
            -v_r * ca * cb - omega_beta * p.y - w * cb * p.x,
        ]
    )


def project(p: CameraPoint, k: CameraIntrinsics) -> tuple[float, float]:
    """Pinhole projection to pixel coordinates ``(u, v)``, v increasing down.

    Raises:
        BehindCameraError: if ``p.z <= 0``.
    """
    if p.z <= 0:
        raise BehindCameraError(f"cannot project point with depth {p.z}")
    u = k.u0 + k.alpha_x * p.x / p.z
    v = k.v0 + k.alpha_y * p.y / p.z
    return u, v


def world_to_camera(
    robot_pose: tuple[float, float, float],
    camera_height: float,
    angles: PanTiltAngles,
    p_world,
    limits: JointLimits = DEFAULT_JOINT_LIMITS,
) -> CameraPoint:
    """Transform a world point into the camera frame.

    ``robot_pose`` is ``(x, y, theta)``; the optical center sits at
    ``(x, y, camera_height)`` in world coordinates.
    """
    x, y, theta = robot_pose
    px, py, pz = float(p_world[0]), float(p_world[1]), float(p_world[2])
    dx, dy, dz = px - x, py - y, pz - camera_height
    ct, st = math.cos(theta), math.sin(theta)
    # world -> robot frame (rotation about Z by -theta)
    rx = ct * dx + st * dy
    ry = -st * dx + ct * dy
    rot = rotation_camera_from_robot(angles, limits)
    c = rot @ np.array([rx, ry, dz])
    return CameraPoint(float(c[0]), float(c[1]), float(c[2]))


def depth_eps(k: CameraIntrinsics) -> float:
    """Scale-invariant guard for the depth denominator."""
    return 1e-6 * k.alpha_y


def depth_from_height(
    e_v: float, beta: float, b_y: float, k: CameraIntrinsics
) -> float:
    """Recover optical-axis depth from a known vertical offset.

    ``b_y`` is the point's vertical offset from the camera in the pan frame,
    down-positive (negative for points above the camera).  ``e_v`` is the
    pixel row error ``v - v0`` of the point's projection.

    Returns:
        Depth in meters; positive for physically consistent inputs.

    Raises:
        DepthUnobservableError: when ``e_v*cos(beta) - alpha_y*sin(beta)`` is
            within the guard band of zero (the row is degenerate with the
            current tilt and carries no depth information).
    """
    den = e_v * math.cos(beta) - k.alpha_y * math.sin(beta)
    if abs(den) <= depth_eps(k):
        raise DepthUnobservableError(
            f"depth denominator {den:.3e} within guard {depth_eps(k):.3e}"
        )
    return k.alpha_y * b_y / den


def vertical_offset(camera_height: float, point_height: float) -> float:
    """Down-positive vertical offset of a world point relative to the camera."""
    return camera_height - point_height
