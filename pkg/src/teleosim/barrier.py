"""Closed-form barrier math for the operator-sized acceptable region.

The acceptable region is a disc of radius ``alpha`` centred on the operator
goal.  The barrier value is

    B = s^3 / l^2   if l > 0     (state inside the region)
    B = s           if l <= 0    (state on or outside the boundary)

with s = ||goal - vehicle||^2 and slack l = alpha^2 - s.  B is non-negative,
zero only when vehicle and goal coincide, and deliberately discontinuous at
the boundary (the inside branch diverges as l -> 0+, which is what keeps the
state from crossing outward).

Two safety filters are built on top of it:

* ``region_filter`` - the shared-authority filter.  Inside the region it
  cancels just enough of the autonomous command to respect the rate budget;
  outside it adds a Sontag-style margin so the state is driven back to the
  goal.
* ``baseline_assist_filter`` - the classical human-assist form for a generic
  time-varying barrier (fixed rate budget k*B + c), kept as a baseline.

All functions are pure, operate on plain floats/tuples and are deterministic:
identical inputs produce bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

Vec2 = Tuple[float, float]
Mat2 = Tuple[Tuple[float, float], Tuple[float, float]]

ZERO2: Vec2 = (0.0, 0.0)


class ControllerFault(Exception):
    """Non-finite value reached the controller; caller must emergency-stop."""


def _require_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ControllerFault(f"non-finite controller input: {v!r}")


def _sign(x: float) -> float:
    # sign(0) := 0 so the budget's first term vanishes exactly on the boundary
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@dataclass(frozen=True)
class CbfParams:
    """Gains and numeric guards for the region filters.

    k, c           rate-budget gains (dB/dt <= k*B + c must stay feasible)
    radius_max     largest commandable region radius [m]
    grad_floor     ||grad||^2 below which the filter output is zeroed
    output_cap     norm saturation for the filter output [m/s]
    """

    k: float = 1.0
    c: float = 1.0
    radius_max: float = 4.0
    grad_floor: float = 1e-12
    output_cap: float = 10.0

    def __post_init__(self):
        if not (self.k > 0.0 and self.c > 0.0 and self.radius_max > 0.0
                and self.grad_floor > 0.0 and self.output_cap > 0.0):
            raise ValueError("CbfParams fields must all be positive")


@dataclass(frozen=True)
class BarrierEval:
    """Barrier value plus the gradients the filters need.

    slack > 0 iff the vehicle is strictly inside the region.  grad_goal is
    exactly -grad_vehicle (B depends only on goal - vehicle), and
    d_value_d_radius is 0 on the outside branch.
    """

    value: float
    slack: float
    grad_vehicle: Vec2
    grad_goal: Vec2
    d_value_d_radius: float


@dataclass(frozen=True)
class FilterDiagnostics:
    """Per-call internals of a region filter evaluation."""

    nominal_rate: float      # barrier rate under current commands, before filtering
    rate_budget: float       # largest admissible barrier rate
    margin: float            # Sontag-style extra decrease applied outside the region
    engaged: bool            # nominal_rate > rate_budget
    saturated: bool          # output hit the norm cap
    singular: bool           # gradient too small to act on


def barrier_value(vehicle: Vec2, goal: Vec2, radius: float) -> Tuple[float, float]:
    """Return (B, slack) for the disc of ``radius`` around ``goal``.

    slack = radius^2 - ||goal - vehicle||^2; the slack <= 0 branch is the
    plain squared distance, so the value at slack == 0 is radius^2.
    """
    _require_finite(vehicle[0], vehicle[1], goal[0], goal[1], radius)
    if radius < 0.0:
        raise ValueError("radius must be non-negative")
    dx = goal[0] - vehicle[0]
    dy = goal[1] - vehicle[1]
    s = dx * dx + dy * dy
    slack = radius * radius - s
    if slack > 0.0:
        # s^3 / slack^2 written via the ratio so slack^2 cannot underflow
        ratio = s / slack
        value = s * ratio * ratio
    else:
        value = s
    return value, slack


def barrier_eval(vehicle: Vec2, goal: Vec2, radius: float) -> BarrierEval:
    """Evaluate B together with its gradients.

    Inside (slack > 0), with s the squared separation:
        dB/ds            = 3 s^2 / l^2 + 2 s^3 / l^3
        grad_vehicle     = -2 (dB/ds) (goal - vehicle)
        dB/dradius       = -4 radius s^3 / l^3
    Outside (slack <= 0):
        grad_vehicle     = -2 (goal - vehicle),  dB/dradius = 0
    grad_goal is the exact negation of grad_vehicle in both branches.
    """
    _require_finite(vehicle[0], vehicle[1], goal[0], goal[1], radius)
    if radius < 0.0:
        raise ValueError("radius must be non-negative")
    dx = goal[0] - vehicle[0]
    dy = goal[1] - vehicle[1]
    s = dx * dx + dy * dy
    slack = radius * radius - s
    if slack > 0.0:
        ratio = s / slack
        r2 = ratio * ratio
        value = s * r2
        d_ds = 3.0 * r2 + 2.0 * r2 * ratio
        gx = -2.0 * d_ds * dx
        gy = -2.0 * d_ds * dy
        d_radius = -4.0 * radius * r2 * ratio
    else:
        value = s
        gx = -2.0 * dx
        gy = -2.0 * dy
        d_radius = 0.0
    return BarrierEval(value, slack, (gx, gy), (-gx, -gy), d_radius)


def nominal_rate(ev: BarrierEval, f_val: Vec2, g_val: Mat2,
                 u_auto: Vec2, goal_vel: Vec2) -> float:
    """Barrier rate produced by drift, the autonomous command and goal motion.

    Equals grad_vehicle . f + (grad_vehicle^T g) . u_auto + grad_goal . goal_vel;
    the filter output is not included.
    """
    gx, gy = ev.grad_vehicle
    lgb_x = gx * g_val[0][0] + gy * g_val[1][0]
    lgb_y = gx * g_val[0][1] + gy * g_val[1][1]
    return (gx * f_val[0] + gy * f_val[1]
            + lgb_x * u_auto[0] + lgb_y * u_auto[1]
            + ev.grad_goal[0] * goal_vel[0] + ev.grad_goal[1] * goal_vel[1])


def rate_budget(ev: BarrierEval, radius: float, radius_rate: float,
                params: CbfParams) -> float:
    """Largest barrier rate the filter lets through.

    sign(slack) * (radius / radius_max) * (k B + c) - dB/dradius * radius_rate.
    Shrinking the region (radius_rate < 0) lowers the budget, engaging the
    filter earlier; on the boundary the first term vanishes (sign(0) = 0).
    """
    return (_sign(ev.slack) * (radius / params.radius_max)
            * (params.k * ev.value + params.c)
            - ev.d_value_d_radius * radius_rate)


def smoothing_margin(nominal: float, grad_norm_sq: float, slack: float) -> float:
    """Extra decrease applied outside the region, zero inside.

    max(0, -sign(slack) * sqrt(nominal^2 + grad_norm_sq^2)).  The square-root
    form (Sontag's universal formula) keeps the outside control smooth; the
    grad_norm_sq term guarantees strict decrease even when nominal == 0.
    """
    if grad_norm_sq < 0.0:
        raise ValueError("grad_norm_sq must be non-negative")
    return max(0.0, -_sign(slack)
               * math.sqrt(nominal * nominal + grad_norm_sq * grad_norm_sq))


def _corrective_input(excess: float, lgb: Vec2, params: CbfParams):
    """Shared closed form -(excess / ||lgb||^2) * lgb with guards.

    Returns (u, saturated, singular).  Both filters route their engaged branch
    through here so their arithmetic paths are identical.
    """
    den = lgb[0] * lgb[0] + lgb[1] * lgb[1]
    if den <= params.grad_floor:
        return ZERO2, False, True
    scale = -excess / den
    ux = scale * lgb[0]
    uy = scale * lgb[1]
    norm = math.hypot(ux, uy)
    if norm > params.output_cap:
        shrink = params.output_cap / norm
        return (ux * shrink, uy * shrink), True, False
    return (ux, uy), False, False


def region_filter(vehicle: Vec2, goal: Vec2, radius: float, radius_rate: float,
                  u_auto: Vec2, goal_vel: Vec2, plant, params: CbfParams,
                  ) -> Tuple[Vec2, FilterDiagnostics]:
    """Filter input keeping the vehicle inside the operator's region.

    Output is zero while the nominal rate fits the budget.  When engaged it
    cancels the excess (plus the outside margin), so the post-filter barrier
    rate equals budget - margin.  Norm-saturated at params.output_cap; zeroed
    (and flagged) when the gradient is numerically degenerate.

    Raises ControllerFault on any non-finite input or intermediate.
    """
    _require_finite(radius_rate, u_auto[0], u_auto[1], goal_vel[0], goal_vel[1])
    ev = barrier_eval(vehicle, goal, radius)
    f_val = plant.f(vehicle)
    g_val = plant.g(vehicle)
    gx, gy = ev.grad_vehicle
    lgb = (gx * g_val[0][0] + gy * g_val[1][0],
           gx * g_val[0][1] + gy * g_val[1][1])
    nom = (gx * f_val[0] + gy * f_val[1]
           + lgb[0] * u_auto[0] + lgb[1] * u_auto[1]
           + ev.grad_goal[0] * goal_vel[0] + ev.grad_goal[1] * goal_vel[1])
    budget = rate_budget(ev, radius, radius_rate, params)
    grad_norm_sq = lgb[0] * lgb[0] + lgb[1] * lgb[1]
    margin = smoothing_margin(nom, grad_norm_sq, ev.slack)
    engaged = nom > budget
    if engaged:
        u, saturated, singular = _corrective_input(nom + margin - budget, lgb, params)
    else:
        u, saturated, singular = ZERO2, False, False
    if not (math.isfinite(nom) and math.isfinite(budget) and math.isfinite(margin)
            and math.isfinite(u[0]) and math.isfinite(u[1])):
        raise ControllerFault("non-finite filter state; emergency stop required")
    return u, FilterDiagnostics(nom, budget, margin, engaged, saturated, singular)


@dataclass(frozen=True)
class TimeVaryingBarrier:
    """Generic barrier descriptor for the baseline assist filter.

    value(x, t), grad(x, t) and d_dt(x, t) must be finite wherever evaluated.
    """

    value: Callable[[Vec2, float], float]
    grad: Callable[[Vec2, float], Vec2]
    d_dt: Callable[[Vec2, float], float]


def baseline_assist_filter(x: Vec2, u_human: Vec2, t: float,
                           barrier: TimeVaryingBarrier, plant,
                           params: CbfParams,
                           ) -> Tuple[Vec2, FilterDiagnostics]:
    """Classical human-assist filter against a fixed budget k*B + c.

    The nominal rate is grad . f + (grad^T g) . u_human + dB/dt; the filter
    cancels only the excess over the budget (no outside margin).  Shares the
    corrective closed form (and guards) with ``region_filter``.
    """
    _require_finite(x[0], x[1], u_human[0], u_human[1], t)
    b = barrier.value(x, t)
    grad = barrier.grad(x, t)
    b_t = barrier.d_dt(x, t)
    f_val = plant.f(x)
    g_val = plant.g(x)
    lgb = (grad[0] * g_val[0][0] + grad[1] * g_val[1][0],
           grad[0] * g_val[0][1] + grad[1] * g_val[1][1])
    nom = (grad[0] * f_val[0] + grad[1] * f_val[1]
           + lgb[0] * u_human[0] + lgb[1] * u_human[1] + b_t)
    budget = params.k * b + params.c
    engaged = nom > budget
    if engaged:
        u, saturated, singular = _corrective_input(nom - budget, lgb, params)
    else:
        u, saturated, singular = ZERO2, False, False
    if not (math.isfinite(nom) and math.isfinite(budget)
            and math.isfinite(u[0]) and math.isfinite(u[1])):
        raise ControllerFault("non-finite filter state; emergency stop required")
    return u, FilterDiagnostics(nom, budget, 0.0, engaged, saturated, singular)


def discrete_rate(prev_value: float, next_value: float, dt: float) -> float:
    """Finite-difference barrier rate between two consecutive samples."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return (next_value - prev_value) / dt
