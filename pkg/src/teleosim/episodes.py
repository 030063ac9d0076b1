"""Fixed-step episode runner and the self-describing episode log.

One episode steps the full loop at a fixed dt:

    operator frame -> device -> input mapping -> (region mode: goal/radius
    update -> region filter -> vehicle input = autonomous + filter correction
    | simple mode: vehicle input = stick mapping) -> plant -> obstacle -> log

Episodes are deterministic: identical (config, seed, script) produce
byte-identical persisted logs.  Logs are a CSV table (one row per step, unit
suffixes in the header names) plus a JSON sidecar carrying the full config,
its hash and the episode outcome.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .barrier import (CbfParams, ControllerFault, Vec2, barrier_value,
                      region_filter)
from .device import (DeviceParams, TILT_LIMIT_X, TILT_LIMIT_Y, guidance_torque,
                     map_inputs, step_tilt)
from .dynamics import (AREA_NONE, AcceptableRegion, IntegratorConfig,
                       PlantDescriptor, VehicleState, filter_radius,
                       single_integrator, step_goal, step_plant)
from .scenario import (Observation, OperatorFrame, OperatorScript, SCRIPTS,
                       Scenario, ScenarioConfig, ScriptRunner, collision_check,
                       initial_obstacle, step_obstacle)

LOG_SCHEMA = 1

MODE_PROPOSED = "proposed"
MODE_SIMPLE = "simple-hsc"

COLUMNS = (
    "t_s",
    "xa_x_m", "xa_y_m",
    "xh_x_m", "xh_y_m",
    "radius_m", "radius_rate_mps", "radius_cmd_m",
    "u_auto_x_mps", "u_auto_y_mps",
    "u_barrier_x_mps", "u_barrier_y_mps",
    "u_human_x_mps", "u_human_y_mps",
    "u_vehicle_x_mps", "u_vehicle_y_mps",
    "barrier", "slack_m2",
    "nominal_rate", "rate_budget", "margin",
    "engaged", "saturated", "singular", "input_clamped",
    "area",
    "obstacle_x_m", "obstacle_y_m", "obstacle_active",
    "tilt_x_rad", "tilt_y_rad", "grip_rad",
)

_INT_COLUMNS = {"engaged", "saturated", "singular", "input_clamped",
                "obstacle_active"}
_STR_COLUMNS = {"area"}


class EpisodeLog:
    """Header + per-step rows + footer, with exact round-trip persistence."""

    def __init__(self, header: dict, rows: List[tuple], footer: dict):
        self.header = header
        self.rows = rows
        self.footer = footer
        self._col_index = {name: i for i, name in enumerate(COLUMNS)}
        self._scenario: Optional[Scenario] = None

    def column(self, name: str) -> list:
        i = self._col_index[name]
        return [row[i] for row in self.rows]

    def array(self, *names: str) -> np.ndarray:
        idx = [self._col_index[n] for n in names]
        return np.array([[row[i] for i in idx] for row in self.rows], dtype=float)

    @property
    def steps(self) -> int:
        return len(self.rows)

    def scenario(self) -> Scenario:
        if self._scenario is None:
            self._scenario = Scenario(ScenarioConfig.from_dict(self.header["scenario"]))
        return self._scenario

    # -- persistence --------------------------------------------------------

    def csv_text(self) -> str:
        out = [",".join(COLUMNS)]
        for row in self.rows:
            parts = []
            for name, v in zip(COLUMNS, row):
                if name in _STR_COLUMNS:
                    parts.append(v)
                elif name in _INT_COLUMNS:
                    parts.append(str(int(v)))
                else:
                    parts.append(repr(float(v)))
            out.append(",".join(parts))
        return "\n".join(out) + "\n"

    def sidecar(self) -> dict:
        return {"header": self.header, "footer": self.footer}

    def save(self, basepath: Union[str, os.PathLike]) -> Tuple[str, str]:
        base = str(basepath)
        csv_path = base + ".csv"
        json_path = base + ".json"
        os.makedirs(os.path.dirname(os.path.abspath(csv_path)), exist_ok=True)
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.csv_text())
        with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path

    @staticmethod
    def load(basepath: Union[str, os.PathLike]) -> "EpisodeLog":
        base = str(basepath)
        if base.endswith(".csv") or base.endswith(".json"):
            base = base.rsplit(".", 1)[0]
        with open(base + ".json", "r", encoding="utf-8") as fh:
            side = json.load(fh)
        rows: List[tuple] = []
        with open(base + ".csv", "r", encoding="utf-8") as fh:
            names = fh.readline().rstrip("\n").split(",")
            if tuple(names) != COLUMNS:
                raise ValueError("episode CSV column mismatch")
            for line in fh:
                parts = line.rstrip("\n").split(",")
                row = []
                for name, p in zip(COLUMNS, parts):
                    if name in _STR_COLUMNS:
                        row.append(p)
                    elif name in _INT_COLUMNS:
                        row.append(int(p))
                    else:
                        row.append(float(p))
                rows.append(tuple(row))
        return EpisodeLog(side["header"], rows, side["footer"])


def _header_hash(header: dict) -> str:
    doc = {k: v for k, v in header.items() if k != "config_hash"}
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


@dataclass
class ReplayOperator:
    """Sample-and-hold playback of a persisted input-frame sequence.

    Frames are (step, axes, gripper) tuples sorted by step; the tilt is driven
    directly (no arm model), matching how live sessions ingest input.
    """

    frames: Sequence[dict]
    direct: bool = True

    def __post_init__(self):
        self._i = 0
        self._axes = (0.0, 0.0)
        self._gripper = 0.0

    def frame(self, obs: Observation) -> OperatorFrame:
        while (self._i < len(self.frames)
               and int(self.frames[self._i]["step"]) <= obs.step):
            f = self.frames[self._i]
            self._axes = (float(f["axes"][0]), float(f["axes"][1]))
            self._gripper = float(f["gripper"])
            self._i += 1
        return OperatorFrame(axes=self._axes, gripper=self._gripper)

    @staticmethod
    def load(path: Union[str, os.PathLike]) -> "ReplayOperator":
        frames = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    frames.append(json.loads(line))
        frames.sort(key=lambda f: int(f["step"]))
        return ReplayOperator(frames)


def save_input_log(frames: Sequence[dict], path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for f in frames:
            fh.write(json.dumps(f, sort_keys=True) + "\n")


def _resolve_operator(operator, scenario: Scenario, seed: int,
                      device: DeviceParams):
    if isinstance(operator, str):
        if operator.startswith("replay:"):
            return ReplayOperator.load(operator.split(":", 1)[1]), "replay"
        if operator not in SCRIPTS:
            raise ValueError(f"unknown operator script {operator!r}")
        script = SCRIPTS[operator]()
        return ScriptRunner(scenario, script, seed, device), script.name
    if isinstance(operator, OperatorScript):
        return ScriptRunner(scenario, operator, seed, device), operator.name
    return operator, getattr(operator, "name", type(operator).__name__)


def build_header(scenario_cfg: ScenarioConfig, mode: str, script_name: str,
                 seed: int, cbf: CbfParams, integrator: IntegratorConfig,
                 device: DeviceParams, plant: PlantDescriptor,
                 direct: bool) -> dict:
    header = {
        "log_schema": LOG_SCHEMA,
        "mode": mode,
        "script": script_name,
        "seed": seed,
        "dt_s": integrator.dt,
        "scenario": scenario_cfg.to_dict(),
        "scenario_hash": scenario_cfg.config_hash(),
        "cbf": {"k": cbf.k, "c": cbf.c, "radius_max": cbf.radius_max,
                "grad_floor": cbf.grad_floor, "output_cap": cbf.output_cap},
        "integrator": {"dt": integrator.dt, "scheme": integrator.scheme,
                       "epsilon": integrator.epsilon, "v_max": integrator.v_max,
                       "shrink_mode": integrator.shrink_mode},
        "device": {"stick_gain": device.stick_gain, "grip_gain": device.grip_gain,
                   "inertia": device.inertia, "damping": device.damping,
                   "guidance_stiffness": device.guidance_stiffness,
                   "guidance_damping": device.guidance_damping,
                   "grip_max": device.grip_max},
        "device_dynamics": not direct,
        "plant": plant.name,
    }
    header["config_hash"] = _header_hash(header)
    return header


class Stepper:
    """Incremental episode state machine: observe() then apply(frame).

    observe() returns the operator-visible Observation for the upcoming step,
    or None once the episode is over (path completed, timeout, fault or step
    budget).  apply() executes one full control step with the given operator
    frame.  run_episode and the live session server drive the same instance
    methods, so a replayed input sequence reproduces a live session exactly.
    """

    def __init__(self, scenario: Scenario, mode: str, cbf: CbfParams,
                 integrator: IntegratorConfig, device: DeviceParams,
                 plant: PlantDescriptor, direct: bool, timeout_s: float):
        self.scenario = scenario
        self.mode = mode
        self.proposed = mode == MODE_PROPOSED
        self.cbf = cbf
        self.integrator = integrator
        self.device = device
        self.plant = plant
        self.direct = direct
        self.timeout = timeout_s
        self.max_steps = int(math.ceil(timeout_s / integrator.dt)) + 1

        start = scenario.path.point_at(0.0)
        self.vehicle = VehicleState(pos=start, t=0.0, area=AREA_NONE)
        self.reg = AcceptableRegion(center=start)
        # device state as plain floats: this loop runs ~500x per simulated second
        self.tilt: Vec2 = (0.0, 0.0)
        self.tilt_rate: Vec2 = (0.0, 0.0)
        self.grip_angle = 0.0
        self.obstacle = initial_obstacle(scenario.cfg)
        self.k = 0
        self.rows: List[tuple] = []
        self.collision_events: List[dict] = []
        self.in_collision = False
        self.completed = False
        self.fault: Optional[str] = None
        self.started_inside: Optional[bool] = None
        self._hint_v: Optional[int] = None
        self._hint_g: Optional[int] = None
        self._pending = None
        # per-area running accumulators for live metrics (sum d^2, rows)
        self._acc = {label: [0.0, 0] for label in ("A", "B", "C", "all")}

    def observe(self) -> Optional[Observation]:
        if self.fault is not None or self.completed:
            return None
        if self.scenario.path.beyond_end(self.vehicle.pos):
            self.completed = True
            return None
        if self.vehicle.t >= self.timeout or self.k >= self.max_steps:
            return None
        s_v, d_v, self._hint_v = self.scenario.path.project_hinted(
            self.vehicle.pos[0], self.vehicle.pos[1], self._hint_v)
        area = self.scenario.area_at_arc(s_v)
        u_auto = self.scenario.fac_command(self.vehicle.pos, arc_hint=s_v)
        if self.proposed:
            anchor = self.reg.center
            anchor_arc, _, self._hint_g = self.scenario.path.project_hinted(
                self.reg.center[0], self.reg.center[1], self._hint_g)
        else:
            anchor = self.vehicle.pos
            anchor_arc = s_v
        self._pending = (area, u_auto, d_v)
        return Observation(t=self.vehicle.t, vehicle=self.vehicle.pos,
                           anchor=anchor, area=area, obstacle=self.obstacle,
                           anchor_arc_m=anchor_arc, step=self.k)

    def apply(self, frame: OperatorFrame) -> Optional[tuple]:
        """Execute one step; returns the logged row (None on fault)."""
        if self._pending is None:
            raise RuntimeError("apply() without a preceding observe()")
        area, u_auto, d_v = self._pending
        self._pending = None
        try:
            return self._apply(frame, area, u_auto, d_v)
        except ControllerFault as exc:
            self.fault = str(exc)
            return None

    def _apply(self, frame: OperatorFrame, area: str, u_auto: Vec2,
               d_v: float) -> tuple:
        device = self.device
        integrator = self.integrator
        zero2: Vec2 = (0.0, 0.0)
        g = frame.gripper
        self.grip_angle = ((0.0 if g < 0.0 else 1.0 if g > 1.0 else g)
                           * device.grip_max)
        tilt = self.tilt
        tilt_rate = self.tilt_rate
        if self.direct:
            ax = frame.axes[0]
            ay = frame.axes[1]
            tilt = ((-1.0 if ax < -1.0 else 1.0 if ax > 1.0 else ax) * TILT_LIMIT_X,
                    (-1.0 if ay < -1.0 else 1.0 if ay > 1.0 else ay) * TILT_LIMIT_Y)
            tilt_rate = zero2
            torque = zero2
            self.tilt = tilt
            self.tilt_rate = tilt_rate
        else:
            tilt_cmd = (frame.axes[0] * TILT_LIMIT_X,
                        frame.axes[1] * TILT_LIMIT_Y)
            torque_guide = guidance_torque(u_auto, tilt, tilt_rate, device)
            torque = (
                frame.stiffness * (tilt_cmd[0] - tilt[0])
                - frame.arm_damping * tilt_rate[0] + frame.tremor[0]
                + torque_guide[0],
                frame.stiffness * (tilt_cmd[1] - tilt[1])
                - frame.arm_damping * tilt_rate[1] + frame.tremor[1]
                + torque_guide[1],
            )
        u_human, radius_cmd, clamped = map_inputs(tilt, self.grip_angle,
                                                  device, self.cbf.radius_max)
        vehicle = self.vehicle
        reg = self.reg
        if self.proposed:
            stepped_goal, goal_vel = step_goal(reg, u_human, self.plant,
                                               integrator)
            filtered = filter_radius(reg, radius_cmd, goal_vel, vehicle.pos,
                                     integrator)
            u_barrier, diag = region_filter(
                vehicle.pos, reg.center, reg.radius, filtered.radius_rate,
                u_auto, goal_vel, self.plant, self.cbf)
            u_vehicle = (u_auto[0] + u_barrier[0], u_auto[1] + u_barrier[1])
            b_val, slack = barrier_value(vehicle.pos, reg.center, reg.radius)
            row_goal = reg.center
            row_radius = reg.radius
            row_rate = filtered.radius_rate
            row_cmd = radius_cmd
            nom, budget, margin = (diag.nominal_rate, diag.rate_budget,
                                   diag.margin)
            flags = (diag.engaged, diag.saturated, diag.singular)
        else:
            u_barrier = zero2
            u_vehicle = u_human
            b_val = slack = 0.0
            row_goal = vehicle.pos
            row_radius = row_rate = row_cmd = 0.0
            nom = budget = margin = 0.0
            flags = (False, False, False)

        if self.started_inside is None:
            d0 = math.hypot(row_goal[0] - vehicle.pos[0],
                            row_goal[1] - vehicle.pos[1])
            self.started_inside = d0 <= row_radius + 1e-12

        obstacle = self.obstacle
        if obstacle is not None:
            hit = collision_check(vehicle.pos, obstacle,
                                  self.scenario.cfg.obstacle.half_extents,
                                  self.scenario.cfg.vehicle_radius_m)
            if hit and not self.in_collision:
                self.collision_events.append({"step": self.k, "t_s": vehicle.t})
            self.in_collision = hit
            obs_x, obs_y = obstacle.position
            obs_active = obstacle.active
        else:
            obs_x = obs_y = 0.0
            obs_active = False

        row = (
            vehicle.t,
            vehicle.pos[0], vehicle.pos[1],
            row_goal[0], row_goal[1],
            row_radius, row_rate, row_cmd,
            u_auto[0], u_auto[1],
            u_barrier[0], u_barrier[1],
            u_human[0], u_human[1],
            u_vehicle[0], u_vehicle[1],
            b_val, slack,
            nom, budget, margin,
            int(flags[0]), int(flags[1]), int(flags[2]), int(clamped),
            area,
            obs_x, obs_y, int(obs_active),
            tilt[0], tilt[1], self.grip_angle,
        )
        self.rows.append(row)
        if area != AREA_NONE:
            acc = self._acc[area]
            acc[0] += d_v * d_v
            acc[1] += 1
            alla = self._acc["all"]
            alla[0] += d_v * d_v
            alla[1] += 1

        if obstacle is not None:
            self.obstacle = step_obstacle(obstacle, vehicle.pos, self.scenario,
                                          integrator.dt, area=area)
        self.vehicle = step_plant(VehicleState(pos=vehicle.pos, t=vehicle.t,
                                               area=area),
                                  u_vehicle, self.plant, integrator)
        if self.proposed:
            self.reg = AcceptableRegion(center=stepped_goal.center,
                                        radius_cmd=filtered.radius_cmd,
                                        radius=filtered.radius,
                                        radius_rate=filtered.radius_rate)
        if not self.direct:
            self.tilt, self.tilt_rate = step_tilt(tilt, tilt_rate, torque,
                                                  device, integrator.dt)
        self.k += 1
        return row

    def running_rmse(self, area: str = "all") -> Optional[float]:
        sum_d2, n = self._acc[area]
        if n == 0:
            return None
        return math.sqrt(sum_d2 / n)

    def footer(self) -> dict:
        return {
            "completed": self.completed,
            "fault": self.fault,
            "steps": len(self.rows),
            "final_t_s": self.vehicle.t,
            "collision_count": len(self.collision_events),
            "collision_events": self.collision_events,
            "started_inside": (bool(self.started_inside)
                               if self.started_inside is not None else True),
        }


def run_episode(scenario_cfg: ScenarioConfig,
                mode: str = MODE_PROPOSED,
                operator: Union[str, OperatorScript, object] = "passive",
                seed: int = 0,
                cbf: Optional[CbfParams] = None,
                integrator: Optional[IntegratorConfig] = None,
                device: Optional[DeviceParams] = None,
                plant: Optional[PlantDescriptor] = None,
                max_duration_s: Optional[float] = None) -> EpisodeLog:
    """Run one episode to path completion, timeout or controller fault."""
    if mode not in (MODE_PROPOSED, MODE_SIMPLE):
        raise ValueError(f"unknown mode {mode!r}")
    cbf = cbf or CbfParams()
    device = device or DeviceParams()
    integrator = integrator or IntegratorConfig(v_max=scenario_cfg.v_max_mps)
    plant = plant or single_integrator()
    scenario = Scenario(scenario_cfg)
    op, script_name = _resolve_operator(operator, scenario, seed, device)
    direct = bool(getattr(op, "direct", False))
    header = build_header(scenario_cfg, mode, script_name, seed, cbf,
                          integrator, device, plant, direct)
    timeout = scenario_cfg.timeout_s
    if max_duration_s is not None:
        timeout = min(timeout, max_duration_s)
    st = Stepper(scenario, mode, cbf, integrator, device, plant, direct,
                 timeout)
    while True:
        obs = st.observe()
        if obs is None:
            break
        st.apply(op.frame(obs))
    return EpisodeLog(header, st.rows, st.footer())
