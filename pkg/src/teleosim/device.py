"""Virtual two-axis stick with a grip lever.

Stands in for the physical input device: a second-order tilt dynamics
(inertia, damping, mechanical stops) driven by human torque plus a guidance
torque that pulls the stick toward the autonomous command.  The grip lever is
position-commanded and sets the region radius.

In simple shared-control mode the stick mapping IS the vehicle input, so stick
and arm dynamics leak into the vehicle's motion.  In the region-filtered mode
the same mapping only steers the operator goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Tuple

from .barrier import Vec2

TILT_LIMIT_X = math.radians(20.0)  # forward/back mechanical stop [rad]
TILT_LIMIT_Y = math.radians(25.0)  # left/right mechanical stop [rad]


@dataclass(frozen=True)
class DeviceParams:
    """Gains and mechanical constants of the virtual device.

    stick_gain maps tilt to commanded velocity, grip_gain maps grip angle to
    region radius.  guidance_stiffness/guidance_damping shape the pull toward
    the autonomous command (near-critical damping of the guided stick).
    """

    stick_gain: float = 4.5        # (m/s) per rad; sized so the mechanical
                                   # range covers the autonomous command
    grip_gain: float = 3.8         # m per rad; full grip commands slightly
                                   # under radius_max so the rate budget keeps
                                   # headroom below k*B + c
    inertia: float = 0.01          # kg m^2
    damping: float = 0.05          # N m s / rad
    guidance_stiffness: float = 0.8  # N m / rad
    guidance_damping: float = 0.15   # N m s / rad
    grip_max: float = 1.0          # rad

    def __post_init__(self):
        for name in ("stick_gain", "grip_gain", "inertia", "damping",
                     "guidance_stiffness", "guidance_damping", "grip_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DeviceState:
    tilt: Vec2 = (0.0, 0.0)        # rad, clamped to the mechanical stops
    tilt_rate: Vec2 = (0.0, 0.0)   # rad/s
    grip_angle: float = 0.0        # rad in [0, grip_max]
    torque_human: Vec2 = (0.0, 0.0)
    torque_guidance: Vec2 = (0.0, 0.0)


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def clamp_tilt(tilt: Vec2) -> Vec2:
    return (_clamp(tilt[0], -TILT_LIMIT_X, TILT_LIMIT_X),
            _clamp(tilt[1], -TILT_LIMIT_Y, TILT_LIMIT_Y))


def map_inputs(tilt: Vec2, grip_angle: float, params: DeviceParams,
               radius_max: float) -> Tuple[Vec2, float, bool]:
    """Map device angles to (human command, radius command, clamped flag).

    u_human = stick_gain * tilt, radius_cmd = grip_gain * grip_angle clamped
    to [0, radius_max].  Angles beyond the mechanical range are clamped first;
    clamping is silent apart from the returned flag (episode logs carry it).
    """
    ct = clamp_tilt(tilt)
    cg = _clamp(grip_angle, 0.0, params.grip_max)
    u_human = (params.stick_gain * ct[0], params.stick_gain * ct[1])
    radius_raw = params.grip_gain * cg
    radius_cmd = _clamp(radius_raw, 0.0, radius_max)
    clamped = (ct != tilt) or (cg != grip_angle) or (radius_cmd != radius_raw)
    return u_human, radius_cmd, clamped


def guidance_torque(u_auto: Vec2, tilt: Vec2, tilt_rate: Vec2,
                    params: DeviceParams) -> Vec2:
    """Torque pulling the stick toward the autonomous command.

    The target tilt is u_auto / stick_gain clamped to the mechanical range.
    The same law applies in both control modes.
    """
    target = clamp_tilt((u_auto[0] / params.stick_gain,
                         u_auto[1] / params.stick_gain))
    return (params.guidance_stiffness * (target[0] - tilt[0])
            - params.guidance_damping * tilt_rate[0],
            params.guidance_stiffness * (target[1] - tilt[1])
            - params.guidance_damping * tilt_rate[1])


def _step_axis(angle: float, rate: float, torque: float, limit: float,
               params: DeviceParams, dt: float) -> Tuple[float, float]:
    # Semi-implicit Euler; velocity is zeroed when the stop is hit.
    acc = (torque - params.damping * rate) / params.inertia
    rate = rate + dt * acc
    angle = angle + dt * rate
    if angle > limit:
        return limit, 0.0
    if angle < -limit:
        return -limit, 0.0
    return angle, rate


def step_tilt(tilt: Vec2, tilt_rate: Vec2, torque: Vec2, params: DeviceParams,
              dt: float) -> Tuple[Vec2, Vec2]:
    """Tuple-level tilt step (the episode hot loop uses this directly)."""
    ax, rx = _step_axis(tilt[0], tilt_rate[0], torque[0], TILT_LIMIT_X, params, dt)
    ay, ry = _step_axis(tilt[1], tilt_rate[1], torque[1], TILT_LIMIT_Y, params, dt)
    return (ax, ay), (rx, ry)


def step_device(dev: DeviceState, torque_human: Vec2, torque_guidance: Vec2,
                params: DeviceParams, dt: float) -> DeviceState:
    """Advance the stick one step under human plus guidance torque."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    tilt, rate = step_tilt(dev.tilt, dev.tilt_rate,
                           (torque_human[0] + torque_guidance[0],
                            torque_human[1] + torque_guidance[1]), params, dt)
    return replace(dev, tilt=tilt, tilt_rate=rate,
                   torque_human=torque_human, torque_guidance=torque_guidance)


def set_grip(dev: DeviceState, grip_fraction: float, params: DeviceParams) -> DeviceState:
    """Position-command the grip lever from a [0, 1] fraction."""
    return replace(dev, grip_angle=_clamp(grip_fraction, 0.0, 1.0) * params.grip_max)


def set_tilt_direct(dev: DeviceState, axes: Vec2) -> DeviceState:
    """Drive tilt directly from normalized axes (live-console default).

    Bypasses the torque dynamics so a UI input is not filtered through a
    second arm model; axes are in [-1, 1] per axis.
    """
    tilt = (_clamp(axes[0], -1.0, 1.0) * TILT_LIMIT_X,
            _clamp(axes[1], -1.0, 1.0) * TILT_LIMIT_Y)
    return replace(dev, tilt=tilt, tilt_rate=(0.0, 0.0))


def simple_hsc_command(dev: DeviceState, params: DeviceParams) -> Vec2:
    """Vehicle input in simple shared-control mode: the stick mapping itself."""
    ct = clamp_tilt(dev.tilt)
    return (params.stick_gain * ct[0], params.stick_gain * ct[1])
