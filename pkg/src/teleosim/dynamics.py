"""Control-affine plants, the acceptable-region state and fixed-step integration.

Everything here is a pure function over small immutable values.  One episode
steps single-threaded at a fixed dt; two runs with identical inputs produce
bit-identical state sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

from .barrier import ControllerFault, Vec2, Mat2

AREA_NONE = "none"

_IDENTITY2: Mat2 = ((1.0, 0.0), (0.0, 1.0))


@dataclass(frozen=True)
class PlantDescriptor:
    """Control-affine plant xdot = f(x) + g(x) u with locally Lipschitz f, g."""

    f: Callable[[Vec2], Vec2]
    g: Callable[[Vec2], Mat2]
    name: str = "plant"


def single_integrator() -> PlantDescriptor:
    """The default plant: f = 0, g = identity (velocity-commanded vehicle)."""
    return PlantDescriptor(f=lambda x: (0.0, 0.0),
                           g=lambda x: _IDENTITY2,
                           name="single-integrator")


@dataclass(frozen=True)
class VehicleState:
    pos: Vec2
    t: float = 0.0
    area: str = AREA_NONE


@dataclass(frozen=True)
class AcceptableRegion:
    """Operator goal plus the commanded and filtered region radius."""

    center: Vec2
    radius_cmd: float = 0.0   # raw operator command [m]
    radius: float = 0.0       # low-pass filtered radius actually enforced [m]
    radius_rate: float = 0.0  # rate applied to ``radius`` this step [m/s]


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    epsilon is the radius low-pass time constant; v_max is the maximum vehicle
    speed, which also bounds how fast the region may contract.  shrink_mode
    selects the contraction-limit condition: "position" uses the goal position
    dot product, "velocity" the goal velocity (see filter_radius).
    """

    dt: float = 0.002
    scheme: str = "euler"       # "euler" | "rk4"
    epsilon: float = 0.1
    v_max: float = 2.0
    shrink_mode: str = "position"

    def __post_init__(self):
        if self.dt <= 0.0 or self.epsilon <= 0.0 or self.v_max <= 0.0:
            raise ValueError("dt, epsilon and v_max must be positive")
        if self.scheme not in ("euler", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.shrink_mode not in ("position", "velocity"):
            raise ValueError(f"unknown shrink_mode {self.shrink_mode!r}")


def _field(pos: Vec2, u: Vec2, plant: PlantDescriptor) -> Vec2:
    f = plant.f(pos)
    g = plant.g(pos)
    return (f[0] + g[0][0] * u[0] + g[0][1] * u[1],
            f[1] + g[1][0] * u[0] + g[1][1] * u[1])


def _advance(pos: Vec2, u: Vec2, plant: PlantDescriptor, dt: float,
             scheme: str) -> Vec2:
    # The input is held over the step in both schemes.
    if scheme == "euler":
        k = _field(pos, u, plant)
        return (pos[0] + dt * k[0], pos[1] + dt * k[1])
    k1 = _field(pos, u, plant)
    k2 = _field((pos[0] + 0.5 * dt * k1[0], pos[1] + 0.5 * dt * k1[1]), u, plant)
    k3 = _field((pos[0] + 0.5 * dt * k2[0], pos[1] + 0.5 * dt * k2[1]), u, plant)
    k4 = _field((pos[0] + dt * k3[0], pos[1] + dt * k3[1]), u, plant)
    return (pos[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            pos[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]))


def step_plant(state: VehicleState, u_total: Vec2, plant: PlantDescriptor,
               cfg: IntegratorConfig) -> VehicleState:
    """Advance the vehicle one step under the total input u_total."""
    if not (math.isfinite(u_total[0]) and math.isfinite(u_total[1])):
        raise ControllerFault(f"non-finite vehicle input: {u_total!r}")
    pos = _advance(state.pos, u_total, plant, cfg.dt, cfg.scheme)
    return VehicleState(pos=pos, t=state.t + cfg.dt, area=state.area)


def step_goal(region: AcceptableRegion, u_human: Vec2, plant: PlantDescriptor,
              cfg: IntegratorConfig) -> Tuple[AcceptableRegion, Vec2]:
    """Advance the goal one step under the human command.

    Returns the new region and the goal velocity actually applied over the
    step, defined as (center_next - center) / dt so downstream consumers see a
    rate exactly consistent with the discrete goal motion.
    """
    if not (math.isfinite(u_human[0]) and math.isfinite(u_human[1])):
        raise ControllerFault(f"non-finite human input: {u_human!r}")
    center = _advance(region.center, u_human, plant, cfg.dt, cfg.scheme)
    vel = ((center[0] - region.center[0]) / cfg.dt,
           (center[1] - region.center[1]) / cfg.dt)
    return AcceptableRegion(center=center, radius_cmd=region.radius_cmd,
                            radius=region.radius,
                            radius_rate=region.radius_rate), vel


def shrink_limit(region: AcceptableRegion, goal_vel: Vec2, vehicle: Vec2,
                 cfg: IntegratorConfig) -> float:
    """Maximum admissible contraction speed of the region radius [m/s].

    v_max +/- ||goal_vel|| depending on which side of the goal the vehicle
    sits; floored at zero so a fast goal can never force expansion.
    """
    speed = math.hypot(goal_vel[0], goal_vel[1])
    rel = (region.center[0] - vehicle[0], region.center[1] - vehicle[1])
    if cfg.shrink_mode == "position":
        dot = rel[0] * region.center[0] + rel[1] * region.center[1]
    else:
        dot = rel[0] * goal_vel[0] + rel[1] * goal_vel[1]
    limit = cfg.v_max + speed if dot > 0.0 else cfg.v_max - speed
    return max(limit, 0.0)


def filter_radius(region: AcceptableRegion, radius_cmd: float, goal_vel: Vec2,
                  vehicle: Vec2, cfg: IntegratorConfig) -> AcceptableRegion:
    """Low-pass the commanded radius, rate-limiting contraction only.

    raw rate r = (radius_cmd - radius) / epsilon; if r < 0 it is clamped at
    -shrink_limit so the boundary can never close in faster than the vehicle
    can yield.  Expansion is never limited.  The applied rate is stored in
    radius_rate and the radius itself never goes negative.
    """
    if not math.isfinite(radius_cmd):
        raise ControllerFault(f"non-finite radius command: {radius_cmd!r}")
    rate = (radius_cmd - region.radius) / cfg.epsilon
    if rate < 0.0:
        rate = max(rate, -shrink_limit(region, goal_vel, vehicle, cfg))
    radius = max(region.radius + rate * cfg.dt, 0.0)
    return AcceptableRegion(center=region.center, radius_cmd=radius_cmd,
                            radius=radius, radius_rate=rate)
