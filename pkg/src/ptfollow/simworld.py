"""Deterministic kinematic world for closed-loop runs.

The robot is a unicycle (forward speed plus yaw rate) carrying the pan-tilt
camera; the followed person is a vertical segment moving in the ground plane,
reduced to exactly the two points the controller regulates: the body center
and the head top.  Ground-truth box measurements come from projecting those
two points through the pinhole model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

from .controller import BoxMeasurement, ControlCommand
from .geometry import (
    DEFAULT_JOINT_LIMITS,
    CameraIntrinsics,
    JointLimits,
    PanTiltAngles,
    project,
    vertical_offset,
    world_to_camera,
)


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class SimState:
    """World snapshot: time, robot planar pose, joint angles, target plan
    position."""

    t: float = 0.0
    robot: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angles: PanTiltAngles = PanTiltAngles()
    target: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class CircleTrajectory:
    """Circular walk: ``(cx - r*cos(rate*t + phase), cy - r*sin(rate*t + phase))``."""

    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.4
    rate: float = 1.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("trajectory: circle radius must be > 0")

    def position(self, t: float) -> tuple[float, float]:
        ang = self.rate * t + self.phase
        return (
            self.center[0] - self.radius * math.cos(ang),
            self.center[1] - self.radius * math.sin(ang),
        )


@dataclass(frozen=True)
class LineTrajectory:
    """Constant-velocity walk starting after an optional delay."""

    start: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    delay: float = 0.0

    def position(self, t: float) -> tuple[float, float]:
        dt = max(0.0, t - self.delay)
        return (self.start[0] + self.velocity[0] * dt, self.start[1] + self.velocity[1] * dt)


@dataclass(frozen=True)
class WaypointTrajectory:
    """Constant-speed walk along a polyline, holding at the final point.

    ``delay`` keeps the target at the first waypoint until that time, which
    makes scripted move-during-occlusion scenarios easy to write.
    """

    points: tuple[tuple[float, float], ...]
    speed: float = 1.0
    delay: float = 0.0

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("trajectory: waypoint list must be non-empty")
        if self.speed <= 0:
            raise ValueError("trajectory: waypoint speed must be > 0")

    def position(self, t: float) -> tuple[float, float]:
        remaining = self.speed * max(0.0, t - self.delay)
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            seg = math.hypot(x1 - x0, y1 - y0)
            if remaining <= seg:
                if seg == 0.0:
                    continue
                f = remaining / seg
                return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
            remaining -= seg
        return self.points[-1]


TargetTrajectory = Union[CircleTrajectory, LineTrajectory, WaypointTrajectory]


def target_position(t: float, traj: TargetTrajectory) -> tuple[float, float]:
    """Evaluate a trajectory at time ``t``."""
    return traj.position(t)


@dataclass(frozen=True)
class BodyModel:
    """Vertical-segment person model plus the camera mount height, meters.

    The body center sits at half the person's height.
    """

    camera_height: float = 0.7
    body_center_height: float = 0.9
    head_height: float = 1.8

    def __post_init__(self) -> None:
        if not 0.0 < self.camera_height < self.head_height:
            raise ValueError("body: need 0 < camera_height < head_height")
        if abs(self.body_center_height - self.head_height / 2.0) > 1e-9:
            raise ValueError("body: body_center_height must equal head_height/2")

    @property
    def offset_body(self) -> float:
        """Down-positive vertical offset of the body center from the camera."""
        return vertical_offset(self.camera_height, self.body_center_height)

    @property
    def offset_head(self) -> float:
        return vertical_offset(self.camera_height, self.head_height)

    @property
    def lambda1(self) -> float:
        """Inverse body-center offset (signed, down-positive convention)."""
        return 1.0 / self.offset_body

    @property
    def lambda2(self) -> float:
        return 1.0 / self.offset_head


def integrate(
    state: SimState,
    cmd: ControlCommand,
    dt: float,
    joint_limits: JointLimits = DEFAULT_JOINT_LIMITS,
) -> SimState:
    """Semi-implicit Euler step: pose advances with the pre-update heading,
    joint angles integrate and clamp to their limits, heading wraps."""
    if dt <= 0:
        raise ValueError("integrate: dt must be > 0")
    x, y, theta = state.robot
    x += cmd.v_r * math.cos(theta) * dt
    y += cmd.v_r * math.sin(theta) * dt
    theta = wrap_angle(theta + cmd.omega_r * dt)
    angles = joint_limits.clamp(
        PanTiltAngles(
            alpha=state.angles.alpha + cmd.omega_alpha * dt,
            beta=state.angles.beta + cmd.omega_beta * dt,
        )
    )
    return replace(state, t=state.t + dt, robot=(x, y, theta), angles=angles)


def integrate_exact_arc(
    state: SimState,
    cmd: ControlCommand,
    dt: float,
    joint_limits: JointLimits = DEFAULT_JOINT_LIMITS,
) -> SimState:
    """Closed-form unicycle flow for constant commands over ``dt``.

    Exact for any sign of ``dt``; used as the integration oracle and for
    finite-difference checks where Euler bias would pollute the comparison.
    """
    x, y, theta = state.robot
    if abs(cmd.omega_r) > 1e-12:
        ratio = cmd.v_r / cmd.omega_r
        x += ratio * (math.sin(theta + cmd.omega_r * dt) - math.sin(theta))
        y -= ratio * (math.cos(theta + cmd.omega_r * dt) - math.cos(theta))
    else:
        x += cmd.v_r * math.cos(theta) * dt
        y += cmd.v_r * math.sin(theta) * dt
    theta = wrap_angle(theta + cmd.omega_r * dt)
    angles = joint_limits.clamp(
        PanTiltAngles(
            alpha=state.angles.alpha + cmd.omega_alpha * dt,
            beta=state.angles.beta + cmd.omega_beta * dt,
        )
    )
    return replace(state, t=state.t + dt, robot=(x, y, theta), angles=angles)


def render_measurement(
    state: SimState, body: BodyModel, k: CameraIntrinsics
) -> Optional[BoxMeasurement]:
    """Ground-truth box from projecting the body-center and head-top points.

    Returns ``None`` when the target is not measurable: either point at or
    behind the optical center, or the box center outside the image bounds.
    """
    tx, ty = state.target
    p_center = world_to_camera(
        state.robot, body.camera_height, state.angles, (tx, ty, body.body_center_height)
    )
    p_head = world_to_camera(
        state.robot, body.camera_height, state.angles, (tx, ty, body.head_height)
    )
    if p_center.z <= 0.0 or p_head.z <= 0.0:
        return None
    u, v = project(p_center, k)
    _, v2 = project(p_head, k)
    if not (0.0 <= u < k.width and 0.0 <= v < k.height):
        return None
    if not v2 < v:  # only possible for degenerate geometry behind the mast
        return None
    return BoxMeasurement(u=u, v=v, v2=v2, score=1.0)


def true_body_center_depth(
    state: SimState, body: BodyModel, k: CameraIntrinsics
) -> float:
    """Camera-frame depth of the body-center point (test oracle)."""
    tx, ty = state.target
    p = world_to_camera(
        state.robot, body.camera_height, state.angles, (tx, ty, body.body_center_height)
    )
    return p.z


def distance_to_target(state: SimState) -> float:
    """Planar robot-to-target distance."""
    return math.hypot(state.target[0] - state.robot[0], state.target[1] - state.robot[1])
