"""Reference path, area labels, crossing obstacle and scripted operators.

The reference path is a polyline with an arc-length parameterization; areas
are half-open arc-length intervals [start, end) so every point classifies to
exactly one label.  The autonomous command is a pure-pursuit law over the
polyline and is deliberately obstacle-blind: clearing the crossing hazard in
area B is the operator's job.

Scripted operators stand in for human participants so experiments are
reproducible: a script is a list of latched directives (stick behaviour, grip
schedule, arm stiffness) triggered by episode events, with seedable jitter on
reaction delays and stiffness plus an optional hand-tremor torque.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .barrier import Vec2
from .device import (DeviceParams, TILT_LIMIT_X, TILT_LIMIT_Y)
from .dynamics import AREA_NONE

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Raised for malformed or version-mismatched scenario documents."""


# ---------------------------------------------------------------------------
# path geometry


class Path:
    """Polyline with cached segment tables for fast nearest-point queries."""

    def __init__(self, points: Sequence[Tuple[float, float]]):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
            raise ConfigError("path needs at least one (x, y) point")
        if not np.all(np.isfinite(pts)):
            raise ConfigError("path points must be finite")
        if len(pts) > 1:
            keep = np.ones(len(pts), dtype=bool)
            keep[1:] = np.hypot(*(pts[1:] - pts[:-1]).T) > 0.0
            pts = pts[keep]
        self.points = pts
        if len(pts) == 1:
            self.length = 0.0
            self._seg_len = np.zeros(0)
            self._cum = np.zeros(1)
            return
        d = pts[1:] - pts[:-1]
        self._ax = pts[:-1, 0].copy()
        self._ay = pts[:-1, 1].copy()
        self._dx = d[:, 0].copy()
        self._dy = d[:, 1].copy()
        self._seg_len = np.hypot(self._dx, self._dy)
        self._inv_len2 = 1.0 / (self._seg_len * self._seg_len)
        self._cum = np.concatenate(([0.0], np.cumsum(self._seg_len)))
        self.length = float(self._cum[-1])
        # plain-float copies for the per-step queries (bisect beats numpy here)
        self._cum_list = self._cum.tolist()
        self._ax_list = self._ax.tolist()
        self._ay_list = self._ay.tolist()
        self._dx_list = self._dx.tolist()
        self._dy_list = self._dy.tolist()
        self._len_list = self._seg_len.tolist()
        self._inv_len2_list = self._inv_len2.tolist()
        end_inv = 1.0 / float(self._seg_len[-1])
        self._end = (float(pts[-1, 0]), float(pts[-1, 1]))
        self._end_tan = (float(self._dx[-1]) * end_inv,
                         float(self._dy[-1]) * end_inv)

    def project_many(self, pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Arc-length and distance of the nearest path point, per input row."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.length == 0.0:
            base = self.points[0]
            d = np.hypot(pts[:, 0] - base[0], pts[:, 1] - base[1])
            return np.zeros(len(pts)), d
        px = pts[:, 0][:, None]
        py = pts[:, 1][:, None]
        t = ((px - self._ax) * self._dx + (py - self._ay) * self._dy) * self._inv_len2
        np.clip(t, 0.0, 1.0, out=t)
        cx = self._ax + t * self._dx - px
        cy = self._ay + t * self._dy - py
        d2 = cx * cx + cy * cy
        idx = np.argmin(d2, axis=1)
        rows = np.arange(len(pts))
        s = self._cum[idx] + t[rows, idx] * self._seg_len[idx]
        return s, np.sqrt(d2[rows, idx])

    def project(self, p: Vec2) -> Tuple[float, float]:
        s, d = self.project_many(np.array([[p[0], p[1]]]))
        return float(s[0]), float(d[0])

    def project_hinted(self, px: float, py: float,
                       hint: Optional[int]) -> Tuple[float, float, int]:
        """Nearest-point query seeded with the previous segment index.

        Searches a small window around the hint; whenever the winner is not
        strictly interior to the window the full scan decides instead, so the
        result matches project() for queries that move smoothly along the
        path.  Returns (arc_length, distance, segment_index).
        """
        if self.length == 0.0:
            base = self.points[0]
            return 0.0, math.hypot(px - base[0], py - base[1]), 0
        n = len(self._len_list)
        if hint is not None:
            lo = hint - 2 if hint >= 2 else 0
            hi = hint + 2 if hint + 2 < n else n - 1
            ax = self._ax_list
            ay = self._ay_list
            dx = self._dx_list
            dy = self._dy_list
            inv = self._inv_len2_list
            best_i = lo
            best_t = 0.0
            best_d2 = math.inf
            for i in range(lo, hi + 1):
                t = ((px - ax[i]) * dx[i] + (py - ay[i]) * dy[i]) * inv[i]
                t = 0.0 if t < 0.0 else 1.0 if t > 1.0 else t
                cx = ax[i] + t * dx[i] - px
                cy = ay[i] + t * dy[i] - py
                d2 = cx * cx + cy * cy
                if d2 < best_d2:
                    best_i = i
                    best_t = t
                    best_d2 = d2
            interior_lo = best_i > lo or lo == 0
            interior_hi = best_i < hi or hi == n - 1
            if interior_lo and interior_hi:
                return (self._cum_list[best_i] + best_t * self._len_list[best_i],
                        math.sqrt(best_d2), best_i)
        pts = np.array([[px, py]])
        t = (((pts[:, 0][:, None] - self._ax) * self._dx
              + (pts[:, 1][:, None] - self._ay) * self._dy) * self._inv_len2)
        np.clip(t, 0.0, 1.0, out=t)
        cx = self._ax + t * self._dx - px
        cy = self._ay + t * self._dy - py
        d2 = cx * cx + cy * cy
        i = int(np.argmin(d2))
        tt = float(t[0, i])
        return (self._cum_list[i] + tt * self._len_list[i],
                math.sqrt(float(d2[0, i])), i)

    def _segment_of(self, s: float) -> int:
        i = bisect.bisect_right(self._cum_list, s) - 1
        last = len(self._len_list) - 1
        return 0 if i < 0 else last if i > last else i

    def point_at(self, s: float) -> Vec2:
        """Point at arc length s (clamped to [0, length])."""
        if self.length == 0.0:
            return (float(self.points[0, 0]), float(self.points[0, 1]))
        s = min(max(s, 0.0), self.length)
        i = self._segment_of(s)
        t = (s - self._cum_list[i]) / self._len_list[i]
        return (self._ax_list[i] + t * self._dx_list[i],
                self._ay_list[i] + t * self._dy_list[i])

    def tangent_at(self, s: float) -> Vec2:
        if self.length == 0.0:
            return (1.0, 0.0)
        s = min(max(s, 0.0), self.length)
        i = self._segment_of(s)
        inv = 1.0 / self._len_list[i]
        return (self._dx_list[i] * inv, self._dy_list[i] * inv)

    def normal_at(self, s: float) -> Vec2:
        tx, ty = self.tangent_at(s)
        return (-ty, tx)

    def beyond_end(self, p: Vec2) -> bool:
        """True once p has passed the plane through the final vertex."""
        if self.length == 0.0:
            return True
        ahead = ((p[0] - self._end[0]) * self._end_tan[0]
                 + (p[1] - self._end[1]) * self._end_tan[1])
        if ahead < 0.0:
            return False
        s, _ = self.project(p)
        return s >= self.length - 1e-9

    def densify(self, factor: int) -> "Path":
        """Same geometry with factor-1 extra collinear vertices per segment."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        if len(self.points) < 2 or factor == 1:
            return Path(self.points)
        out = []
        for i in range(len(self.points) - 1):
            a = self.points[i]
            b = self.points[i + 1]
            for k in range(factor):
                f = k / factor
                out.append((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
        out.append(tuple(self.points[-1]))
        return Path(out)


# ---------------------------------------------------------------------------
# scenario configuration


@dataclass(frozen=True)
class ObstacleSpec:
    home: Vec2                      # resting centre [m]
    half_extents: Vec2 = (1.0, 0.5)  # half width/height [m]
    velocity: Vec2 = (0.0, 3.0)      # applied once triggered [m/s]
    trigger_area: str = "B"
    clear_y: float = 4.0             # scripts treat the hazard as passed above this


@dataclass(frozen=True)
class AreaSpan:
    label: str
    start_m: float
    end_m: float


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    path_points: Tuple[Tuple[float, float], ...]
    areas: Tuple[AreaSpan, ...]
    obstacle: Optional[ObstacleSpec]
    v_ref_mps: float = 1.5
    v_max_mps: float = 2.0
    lookahead_m: float = 1.5
    vehicle_radius_m: float = 0.3
    timeout_s: float = 120.0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "path_points_m": [[x, y] for x, y in self.path_points],
            "areas": [{"label": a.label, "start_m": a.start_m, "end_m": a.end_m}
                      for a in self.areas],
            "obstacle": None if self.obstacle is None else {
                "home_m": list(self.obstacle.home),
                "half_extents_m": list(self.obstacle.half_extents),
                "velocity_mps": list(self.obstacle.velocity),
                "trigger_area": self.obstacle.trigger_area,
                "clear_y_m": self.obstacle.clear_y,
            },
            "v_ref_mps": self.v_ref_mps,
            "v_max_mps": self.v_max_mps,
            "lookahead_m": self.lookahead_m,
            "vehicle_radius_m": self.vehicle_radius_m,
            "timeout_s": self.timeout_s,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ScenarioConfig":
        try:
            version = doc["schema_version"]
            if version != SCHEMA_VERSION:
                raise ConfigError(
                    f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
            obstacle = None
            if doc.get("obstacle") is not None:
                o = doc["obstacle"]
                obstacle = ObstacleSpec(
                    home=tuple(o["home_m"]),
                    half_extents=tuple(o.get("half_extents_m", (1.0, 0.5))),
                    velocity=tuple(o.get("velocity_mps", (0.0, 3.0))),
                    trigger_area=o.get("trigger_area", "B"),
                    clear_y=float(o.get("clear_y_m", 4.0)),
                )
            cfg = ScenarioConfig(
                name=doc["name"],
                path_points=tuple((float(x), float(y))
                                  for x, y in doc["path_points_m"]),
                areas=tuple(AreaSpan(a["label"], float(a["start_m"]), float(a["end_m"]))
                            for a in doc["areas"]),
                obstacle=obstacle,
                v_ref_mps=float(doc.get("v_ref_mps", 1.5)),
                v_max_mps=float(doc.get("v_max_mps", 2.0)),
                lookahead_m=float(doc.get("lookahead_m", 1.5)),
                vehicle_radius_m=float(doc.get("vehicle_radius_m", 0.3)),
                timeout_s=float(doc.get("timeout_s", 120.0)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario document: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        spans = sorted(self.areas, key=lambda a: a.start_m)
        for a, b in zip(spans, spans[1:]):
            if a.end_m > b.start_m:
                raise ConfigError(f"areas {a.label} and {b.label} overlap")
        for a in self.areas:
            if a.end_m <= a.start_m:
                raise ConfigError(f"area {a.label} is empty or inverted")
        if self.v_ref_mps <= 0.0 or self.v_max_mps <= 0.0 or self.lookahead_m <= 0.0:
            raise ConfigError("v_ref_mps, v_max_mps and lookahead_m must be positive")

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}") from exc
        return ScenarioConfig.from_dict(doc)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


class Scenario:
    """Runtime view of a ScenarioConfig with the path tables built."""

    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.path = Path(cfg.path_points)

    def area_at_arc(self, s: float) -> str:
        for a in self.cfg.areas:
            if a.start_m <= s < a.end_m:
                return a.label
        return AREA_NONE

    def area_of(self, pos: Vec2) -> str:
        s, _ = self.path.project(pos)
        return self.area_at_arc(s)

    def fac_command(self, pos: Vec2, arc_hint: Optional[float] = None) -> Vec2:
        """Pure-pursuit velocity command toward the lookahead point.

        Zero once the vehicle has passed the path end (episode complete).
        arc_hint skips the projection when the caller already has it.
        """
        if self.path.beyond_end(pos):
            return (0.0, 0.0)
        s = arc_hint if arc_hint is not None else self.path.project(pos)[0]
        target = self.path.point_at(min(s + self.cfg.lookahead_m, self.path.length))
        vx = target[0] - pos[0]
        vy = target[1] - pos[1]
        norm = math.hypot(vx, vy)
        if norm < 1e-12:
            return (0.0, 0.0)
        speed = min(self.cfg.v_ref_mps, self.cfg.v_max_mps)
        return (speed * vx / norm, speed * vy / norm)


def area_of(pos: Vec2, scenario: Scenario) -> str:
    """Area label of the path point nearest to pos ('none' past the end)."""
    return scenario.area_of(pos)


def default_scenario() -> ScenarioConfig:
    """Three-area course: lane-change, straight with a crossing hazard, slalom.

    Area A is a gentle 2 m lane shift over 38 m, area B a 15 m straight where
    a 2 m x 1 m block sweeps up across the lane once the vehicle enters, and
    area C a 30 m slalom that demands tight tracking.
    """
    spacing = 0.75
    pts = []
    # A: quintic lane change from y=0 to y=2 over x in [0, 38]
    n_a = int(round(38.0 / spacing))
    for i in range(n_a + 1):
        x = 38.0 * i / n_a
        t = x / 38.0
        y = 2.0 * (t * t * t * (10.0 - 15.0 * t + 6.0 * t * t))
        pts.append((x, y))
    # B: straight at y=2 over x in [38, 53]
    n_b = int(round(15.0 / spacing))
    for i in range(1, n_b + 1):
        pts.append((38.0 + 15.0 * i / n_b, 2.0))
    # C: slalom, three 10 m lobes of amplitude 0.75 over x in [53, 83]
    n_c = int(round(30.0 / spacing))
    for i in range(1, n_c + 1):
        x = 30.0 * i / n_c
        y = 2.0 + 0.375 * (1.0 - math.cos(2.0 * math.pi * x / 10.0))
        pts.append((53.0 + x, y))
    path = Path(pts)
    cum = np.concatenate(([0.0], np.cumsum(np.hypot(
        *(path.points[1:] - path.points[:-1]).T))))
    xs = path.points[:, 0]
    a_end = float(cum[int(np.argmin(np.abs(xs - 38.0)))])
    b_end = float(cum[int(np.argmin(np.abs(xs - 53.0)))])
    return ScenarioConfig(
        name="three-area-course",
        path_points=tuple((float(x), float(y)) for x, y in path.points),
        areas=(AreaSpan("A", 0.0, a_end),
               AreaSpan("B", a_end, b_end),
               AreaSpan("C", b_end, path.length)),
        obstacle=ObstacleSpec(home=(45.5, -14.0)),
    )


# ---------------------------------------------------------------------------
# obstacle


@dataclass(frozen=True)
class ObstacleState:
    position: Vec2
    active: bool = False


def initial_obstacle(cfg: ScenarioConfig) -> Optional[ObstacleState]:
    if cfg.obstacle is None:
        return None
    return ObstacleState(position=cfg.obstacle.home, active=False)


def step_obstacle(obs: ObstacleState, vehicle: Vec2, scenario: Scenario,
                  dt: float, area: Optional[str] = None) -> ObstacleState:
    """Latch active when the vehicle enters the trigger area, then sweep.

    The latch never releases within an episode; leaving the trigger area does
    not stop the sweep.  area may pass a precomputed classification.
    """
    spec = scenario.cfg.obstacle
    if spec is None:
        return obs
    active = obs.active
    if not active:
        if area is None:
            area = scenario.area_of(vehicle)
        active = area == spec.trigger_area
    if not active:
        return obs
    return ObstacleState(position=(obs.position[0] + spec.velocity[0] * dt,
                                   obs.position[1] + spec.velocity[1] * dt),
                         active=True)


def collision_check(pos: Vec2, obs: ObstacleState, half_extents: Vec2,
                    vehicle_radius: float) -> bool:
    """Strict overlap between the vehicle disc and the obstacle box.

    Boundary tangency (distance exactly vehicle_radius) counts as no
    collision; a centre inside the box always collides.
    """
    dx = pos[0] - obs.position[0]
    dy = pos[1] - obs.position[1]
    cx = min(max(dx, -half_extents[0]), half_extents[0])
    cy = min(max(dy, -half_extents[1]), half_extents[1])
    ex = dx - cx
    ey = dy - cy
    if ex == 0.0 and ey == 0.0:
        return True
    return ex * ex + ey * ey < vehicle_radius * vehicle_radius


# ---------------------------------------------------------------------------
# scripted operators


@dataclass(frozen=True)
class Directive:
    """One latched phase of a scripted operator.

    trigger: "start", "enter_area:<label>", "obstacle_clear" or "at_time:<s>".
    stick:   "release" (hands off), "follow" (steer toward the path carrot) or
             "hold" (pin the stick at centre, optionally with a lateral evade
             component away from the obstacle).
    """

    trigger: str
    delay_s: float = 0.0
    gripper: float = 1.0
    stick: str = "release"
    offset_m: float = 0.0
    evade: bool = False
    stiffness: float = 0.0

    def __post_init__(self):
        if self.delay_s < 0.0:
            raise ValueError("reaction delay must be non-negative")
        if self.stick not in ("release", "follow", "hold"):
            raise ValueError(f"unknown stick behaviour {self.stick!r}")


@dataclass(frozen=True)
class OperatorScript:
    name: str
    directives: Tuple[Directive, ...]
    preview_m: float = 3.0        # carrot distance of the scripted human
    speed_mps: float = 1.45       # pace the scripted human aims for
    arm_damping: float = 0.03     # N m s / rad, added while hands are on
    tremor_torque: float = 0.0    # N m amplitude of the hand tremor
    evade_axis: float = 0.15      # lateral axis fraction while evading
    jitter: float = 0.2           # relative seed jitter on delays/stiffness

    def __post_init__(self):
        if not self.directives or self.directives[0].trigger != "start":
            raise ValueError("scripts must begin with a 'start' directive")


@dataclass(frozen=True)
class OperatorFrame:
    """One operator input sample plus the arm model driving the stick."""

    axes: Vec2                 # [-1, 1] per axis stick intent
    gripper: float             # [0, 1] grip fraction
    stiffness: float = 0.0     # arm stiffness toward axes [N m / rad]
    arm_damping: float = 0.0
    tremor: Vec2 = (0.0, 0.0)  # additive torque [N m]


@dataclass(frozen=True)
class Observation:
    """What the scripted operator can see at one step."""

    t: float
    vehicle: Vec2
    anchor: Vec2               # what the operator steers: goal or vehicle
    area: str
    obstacle: Optional[ObstacleState]
    anchor_arc_m: float        # arc-length projection of the anchor
    step: int = 0


class ScriptRunner:
    """Deterministic operator: same (scenario, script, seed) -> same frames."""

    def __init__(self, scenario: Scenario, script: OperatorScript, seed: int,
                 device: Optional[DeviceParams] = None):
        self.scenario = scenario
        self.script = script
        self.device = device or DeviceParams()
        rng = random.Random(seed)
        j = script.jitter

        def vary(x: float) -> float:
            return x * (1.0 + j * (2.0 * rng.random() - 1.0))

        self._delays = tuple(vary(d.delay_s) if d.delay_s > 0.0 else 0.0
                             for d in script.directives)
        self._stiffness = tuple(vary(d.stiffness) if d.stiffness > 0.0 else 0.0
                                for d in script.directives)
        self._tremor_freq = (0.9 * vary(1.0), 1.4 * vary(1.0))
        self._tremor_phase = (rng.random() * 2.0 * math.pi,
                              rng.random() * 2.0 * math.pi)
        self._fired: list = [None] * len(script.directives)
        self._conditions = tuple(self._compile(d.trigger)
                                 for d in script.directives)

    def _compile(self, trigger: str):
        if trigger == "start":
            return lambda obs: True
        if trigger.startswith("enter_area:"):
            label = trigger.split(":", 1)[1]
            return lambda obs: obs.area == label
        if trigger.startswith("at_time:"):
            at = float(trigger.split(":", 1)[1])
            return lambda obs: obs.t >= at
        if trigger == "obstacle_clear":
            spec = self.scenario.cfg.obstacle
            if spec is None:
                return lambda obs: False
            clear_y = spec.clear_y
            return lambda obs: (obs.obstacle is not None and obs.obstacle.active
                                and obs.obstacle.position[1] > clear_y)
        raise ValueError(f"unknown trigger {trigger!r}")

    def _active_index(self, obs: Observation) -> int:
        active = 0
        fired = self._fired
        for i, cond in enumerate(self._conditions):
            if fired[i] is None and cond(obs):
                fired[i] = obs.t
            if fired[i] is not None and obs.t >= fired[i] + self._delays[i]:
                active = i
        return active

    def _follow_axes(self, obs: Observation, d: Directive) -> Vec2:
        path = self.scenario.path
        s = min(obs.anchor_arc_m + self.script.preview_m, path.length)
        tx, ty = path.point_at(s)
        if d.offset_m != 0.0:
            nx, ny = path.normal_at(s)
            tx += d.offset_m * nx
            ty += d.offset_m * ny
        vx = tx - obs.anchor[0]
        vy = ty - obs.anchor[1]
        norm = math.hypot(vx, vy)
        if norm < 1e-9:
            return (0.0, 0.0)
        gain = self.script.speed_mps / (norm * self.device.stick_gain)
        return (max(-1.0, min(1.0, vx * gain / TILT_LIMIT_X)),
                max(-1.0, min(1.0, vy * gain / TILT_LIMIT_Y)))

    def frame(self, obs: Observation) -> OperatorFrame:
        i = self._active_index(obs)
        d = self.script.directives[i]
        if d.stick == "release":
            return OperatorFrame(axes=(0.0, 0.0), gripper=d.gripper)
        if d.stick == "follow":
            axes = self._follow_axes(obs, d)
        else:  # hold
            lateral = 0.0
            if d.evade and obs.obstacle is not None and obs.obstacle.active:
                away = 1.0 if obs.obstacle.position[1] <= obs.anchor[1] else -1.0
                lateral = away * self.script.evade_axis
            axes = (0.0, lateral)
        amp = self.script.tremor_torque
        if amp > 0.0:
            tremor = (amp * math.sin(2.0 * math.pi * self._tremor_freq[0] * obs.t
                                     + self._tremor_phase[0]),
                      amp * math.sin(2.0 * math.pi * self._tremor_freq[1] * obs.t
                                     + self._tremor_phase[1]))
        else:
            tremor = (0.0, 0.0)
        return OperatorFrame(axes=axes, gripper=d.gripper,
                             stiffness=self._stiffness[i],
                             arm_damping=self.script.arm_damping,
                             tremor=tremor)


def scripted_operator(obs: Observation, runner: ScriptRunner) -> OperatorFrame:
    """Next deterministic operator frame for this observation."""
    return runner.frame(obs)


def passive_script() -> OperatorScript:
    """Hands off the stick, grip wide open: guidance alone steers the goal."""
    return OperatorScript("passive", (Directive("start", gripper=1.0,
                                                stick="release"),))


def cooperative_script() -> OperatorScript:
    """Follows the course, stops and evades in area B, tightens up in C."""
    return OperatorScript(
        "cooperative",
        (Directive("start", gripper=0.6, stick="follow", stiffness=1.5),
         Directive("enter_area:B", delay_s=0.4, gripper=0.35, stick="hold",
                   evade=True, stiffness=8.0),
         Directive("obstacle_clear", delay_s=0.3, gripper=0.8, stick="follow",
                   stiffness=1.5),
         Directive("enter_area:C", gripper=0.5, stick="follow", stiffness=1.5)),
        tremor_torque=0.008,
    )


def opposing_grip_script() -> OperatorScript:
    """Stiffly pins the stick at centre against the guidance pull."""
    return OperatorScript("opposing-grip",
                          (Directive("start", gripper=1.0, stick="hold",
                                     stiffness=8.0),))


def slam_script(shut_at_s: float = 8.0, reopen_at_s: float = 12.0) -> OperatorScript:
    """Keeps steering but slams the grip shut mid-cruise, then reopens."""
    return OperatorScript(
        "slam",
        (Directive("start", gripper=1.0, stick="follow", stiffness=1.5),
         Directive(f"at_time:{shut_at_s}", gripper=0.0, stick="follow",
                   stiffness=1.5),
         Directive(f"at_time:{reopen_at_s}", gripper=1.0, stick="follow",
                   stiffness=1.5)),
    )


SCRIPTS = {
    "passive": passive_script,
    "cooperative": cooperative_script,
    "opposing-grip": opposing_grip_script,
    "slam": slam_script,
}
