"""Live teleoperation session server.

One browser operator drives the simulator over a websocket at `/session`:
JSON text messages both ways, schema_version 1.  The simulation always steps
at the controller dt; the wall clock only paces the 50 Hz state broadcast
(10 sim steps per broadcast).  Input is sample-and-hold: the latest accepted
input frame applies until the next arrives.  On disconnect the session pauses
with the stick zeroed (grip holds its last value).

The SessionEngine is synchronous and owns all simulation state; the websocket
layer talks to it from a single task per connection, so no simulation state is
shared across execution contexts.
"""

from __future__ import annotations

import asyncio
import json
import math
import os
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .barrier import CbfParams
from .device import DeviceParams, guidance_torque
from .dynamics import IntegratorConfig, single_integrator
from .episodes import (EpisodeLog, MODE_PROPOSED, MODE_SIMPLE, Stepper,
                       build_header, save_input_log)
from .scenario import ConfigError, OperatorFrame, Scenario, ScenarioConfig, default_scenario

SCHEMA_VERSION = 1
STEPS_PER_BROADCAST = 10  # 2 ms controller steps per 50 Hz state frame

IDLE = "idle"
LOADED = "loaded"
RUNNING = "running"
PAUSED = "paused"
COMPLETED = "completed"

_VERB_STATES = {
    "load_scenario": (IDLE, LOADED, COMPLETED),
    "set_mode": (IDLE, LOADED),
    "start": (LOADED, PAUSED),
    "pause": (RUNNING,),
    "reset": (LOADED, RUNNING, PAUSED, COMPLETED),
    "save_replay": (PAUSED, COMPLETED),
}


class ProtocolError(Exception):
    def __init__(self, code: str, detail: str, seq: Optional[int] = None):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.seq = seq


@dataclass(frozen=True)
class InputFrame:
    client_seq: int
    axes: Tuple[float, float]
    gripper: float
    client_time_ms: float = 0.0


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def decode_input(text: str) -> InputFrame:
    """Parse an input message; unknown fields ignored, required ones checked."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError("malformed", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("malformed", "message must be a JSON object")
    seq = doc.get("client_seq")
    if doc.get("type") != "input":
        raise ProtocolError("type", f"expected type 'input', got {doc.get('type')!r}",
                            seq)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ProtocolError("version",
                            f"expected {SCHEMA_VERSION}, got {version!r}", seq)
    try:
        axes = doc["axes"]
        frame = InputFrame(client_seq=int(doc["client_seq"]),
                           axes=(float(axes[0]), float(axes[1])),
                           gripper=float(doc["gripper"]),
                           client_time_ms=float(doc.get("client_time_ms", 0.0)))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ProtocolError("missing-field", f"bad input frame: {exc}", seq) from exc
    if not (math.isfinite(frame.axes[0]) and math.isfinite(frame.axes[1])
            and math.isfinite(frame.gripper)):
        raise ProtocolError("non-finite", "axes/gripper must be finite", seq)
    return frame


def encode_message(doc: dict) -> str:
    """Canonical JSON encoding (sorted keys) with the schema version stamped."""
    out = dict(doc)
    out["schema_version"] = SCHEMA_VERSION
    return json.dumps(out, sort_keys=True, separators=(",", ":"))


def decode_command(text: str) -> Tuple[str, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError("malformed", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("malformed", "message must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ProtocolError("version",
                            f"expected {SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    verb = doc.get("verb")
    if verb not in _VERB_STATES:
        raise ProtocolError("verb", f"unknown verb {verb!r}")
    payload = doc.get("payload") or {}
    if not isinstance(payload, dict):
        raise ProtocolError("malformed", "payload must be an object")
    return verb, payload


class SessionEngine:
    """Synchronous session state machine around a Stepper."""

    def __init__(self, scenario_cfg: Optional[ScenarioConfig] = None,
                 mode: str = MODE_PROPOSED,
                 cbf: Optional[CbfParams] = None,
                 integrator: Optional[IntegratorConfig] = None,
                 device: Optional[DeviceParams] = None):
        self.cbf = cbf or CbfParams()
        self.device = device or DeviceParams()
        self._integrator_arg = integrator
        self.mode = mode
        self.state = IDLE
        self.seq = 0
        self.dropped_frames = 0
        self.scenario_cfg: Optional[ScenarioConfig] = None
        self.scenario: Optional[Scenario] = None
        self.stepper: Optional[Stepper] = None
        self._held = InputFrame(client_seq=-1, axes=(0.0, 0.0), gripper=0.0)
        self._last_seq = -1
        self._clamped = False
        self._input_log: List[dict] = []
        if scenario_cfg is not None:
            self.load(scenario_cfg)

    # -- commands ------------------------------------------------------------

    def _check(self, verb: str) -> None:
        if self.state not in _VERB_STATES[verb]:
            raise ProtocolError("illegal-state",
                                f"{verb} not allowed while {self.state}")

    def load(self, scenario_cfg: ScenarioConfig) -> None:
        self._check("load_scenario")
        scenario_cfg.validate()
        self.scenario_cfg = scenario_cfg
        self.scenario = Scenario(scenario_cfg)
        self._fresh_stepper()
        self.state = LOADED

    def set_mode(self, mode: str) -> None:
        self._check("set_mode")
        if mode not in (MODE_PROPOSED, MODE_SIMPLE):
            raise ProtocolError("mode", f"unknown mode {mode!r}")
        self.mode = mode
        if self.scenario is not None:
            self._fresh_stepper()

    def start(self) -> None:
        self._check("start")
        self.state = RUNNING

    def pause(self) -> None:
        self._check("pause")
        self.state = PAUSED

    def reset(self) -> None:
        self._check("reset")
        self._fresh_stepper()
        self.state = LOADED

    def _fresh_stepper(self) -> None:
        integrator = self._integrator_arg or IntegratorConfig(
            v_max=self.scenario_cfg.v_max_mps)
        self.integrator = integrator
        self.stepper = Stepper(self.scenario, self.mode, self.cbf, integrator,
                               self.device, single_integrator(), True,
                               self.scenario_cfg.timeout_s)
        self._held = InputFrame(client_seq=-1, axes=(0.0, 0.0), gripper=0.0)
        self._last_seq = -1
        self._clamped = False
        self._input_log = []
        self.seq = 0
        self.dropped_frames = 0

    def command(self, verb: str, payload: dict) -> dict:
        """Execute a session command; returns the ack payload."""
        if verb == "load_scenario":
            spec = payload.get("scenario", "default")
            if spec == "default":
                cfg = default_scenario()
            elif isinstance(spec, dict):
                cfg = ScenarioConfig.from_dict(spec)
            else:
                raise ProtocolError("payload", "scenario must be 'default' or an object")
            self.load(cfg)
            return {"scenario": cfg.name}
        if verb == "set_mode":
            self.set_mode(payload.get("mode"))
            return {"mode": self.mode}
        if verb == "start":
            self.start()
            return {}
        if verb == "pause":
            self.pause()
            return {}
        if verb == "reset":
            self.reset()
            return {}
        if verb == "save_replay":
            self._check("save_replay")
            name = payload.get("name") or f"session_{int(time.time())}"
            out = payload.get("out") or os.environ.get("TELEOSIM_OUT", "runs")
            base = os.path.join(out, str(name))
            episode_csv, episode_json = self.episode_log().save(base)
            input_path = base + ".input.jsonl"
            save_input_log(self._input_log, input_path)
            return {"episode_csv": episode_csv, "episode_json": episode_json,
                    "input_log": input_path}
        raise ProtocolError("verb", f"unknown verb {verb!r}")

    # -- input ingestion -----------------------------------------------------

    def ingest(self, frame: InputFrame) -> bool:
        """Accept one input frame; stale client_seq values are discarded."""
        if frame.client_seq <= self._last_seq:
            return False
        self._last_seq = frame.client_seq
        ax = _clamp(frame.axes[0], -1.0, 1.0)
        ay = _clamp(frame.axes[1], -1.0, 1.0)
        grip = _clamp(frame.gripper, 0.0, 1.0)
        self._clamped = (ax, ay) != frame.axes or grip != frame.gripper
        self._held = InputFrame(frame.client_seq, (ax, ay), grip,
                                frame.client_time_ms)
        if self.stepper is not None:
            self._input_log.append({"step": self.stepper.k,
                                    "client_seq": frame.client_seq,
                                    "axes": [ax, ay], "gripper": grip,
                                    "client_time_ms": frame.client_time_ms})
        return True

    def disconnect(self) -> None:
        """Fail-safe on client loss: pause, stick to zero, grip held."""
        if self.state == RUNNING:
            self.state = PAUSED
        self._held = InputFrame(self._last_seq, (0.0, 0.0), self._held.gripper)

    # -- stepping and broadcast ----------------------------------------------

    def advance(self) -> dict:
        """Step one broadcast period (if running) and build the state frame."""
        if self.state == RUNNING and self.stepper is not None:
            frame = OperatorFrame(axes=self._held.axes,
                                  gripper=self._held.gripper)
            for _ in range(STEPS_PER_BROADCAST):
                obs = self.stepper.observe()
                if obs is None:
                    self.state = COMPLETED
                    break
                self.stepper.apply(frame)
        return self.state_frame()

    def state_frame(self) -> dict:
        self.seq += 1
        st = self.stepper
        if st is None:
            return {"type": "state", "seq": self.seq, "session": self.state}
        vehicle = st.vehicle
        reg = st.reg
        if st.rows:
            r = st.rows[-1]
            u_auto = (r[8], r[9])
            u_barrier = (r[10], r[11])
            u_human = (r[12], r[13])
            u_vehicle = (r[14], r[15])
            barrier_val = r[16]
            engaged = bool(r[21])
            area = r[25]
        else:
            u_auto = u_barrier = u_human = u_vehicle = (0.0, 0.0)
            barrier_val = 0.0
            engaged = False
            area = vehicle.area
        tau = guidance_torque(u_auto, st.tilt, st.tilt_rate, self.device)
        obstacle = st.obstacle
        rmse = st.running_rmse()
        return {
            "type": "state",
            "seq": self.seq,
            "session": self.state,
            "mode": self.mode,
            "t_s": vehicle.t,
            "vehicle": [vehicle.pos[0], vehicle.pos[1]],
            "goal": [reg.center[0], reg.center[1]],
            "radius_m": reg.radius,
            "radius_cmd_m": reg.radius_cmd,
            "u_auto": [u_auto[0], u_auto[1]],
            "u_barrier": [u_barrier[0], u_barrier[1]],
            "u_human": [u_human[0], u_human[1]],
            "u_vehicle": [u_vehicle[0], u_vehicle[1]],
            "barrier": barrier_val,
            "engaged": engaged,
            "area": area,
            "obstacle": None if obstacle is None else {
                "position": [obstacle.position[0], obstacle.position[1]],
                "active": obstacle.active,
            },
            "device": {"tilt": [st.tilt[0], st.tilt[1]],
                       "grip_rad": st.grip_angle},
            "torque_guidance": [tau[0], tau[1]],
            "input_clamped": self._clamped,
            "dropped_frames": self.dropped_frames,
            "metrics": {
                "rmse_m": rmse,
                "collisions": len(st.collision_events),
                "elapsed_s": vehicle.t,
                "completed": st.completed,
            },
        }

    def scenario_message(self) -> dict:
        cfg = self.scenario_cfg
        if cfg is None:
            return {"type": "scenario", "loaded": False}
        return {
            "type": "scenario",
            "loaded": True,
            "name": cfg.name,
            "mode": self.mode,
            "session": self.state,
            "path": [[x, y] for x, y in cfg.path_points],
            "areas": [{"label": a.label, "start_m": a.start_m, "end_m": a.end_m}
                      for a in cfg.areas],
            "obstacle": None if cfg.obstacle is None else {
                "home": list(cfg.obstacle.home),
                "half_extents": list(cfg.obstacle.half_extents),
            },
            "vehicle_radius_m": cfg.vehicle_radius_m,
        }

    def episode_log(self) -> EpisodeLog:
        header = build_header(self.scenario_cfg, self.mode, "live-session", 0,
                              self.cbf, self.integrator, self.device,
                              single_integrator(), True)
        return EpisodeLog(header, list(self.stepper.rows),
                          self.stepper.footer())


def handle_text(engine: SessionEngine, text: str) -> List[str]:
    """Process one inbound websocket message; returns replies to send."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return [encode_message({"type": "error", "code": "malformed",
                                "detail": f"invalid JSON: {exc}"})]
    kind = doc.get("type") if isinstance(doc, dict) else None
    try:
        if kind == "input":
            engine.ingest(decode_input(text))
            return []
        if kind == "command":
            verb, payload = decode_command(text)
            result = engine.command(verb, payload)
            replies = [encode_message({"type": "ack", "verb": verb,
                                       "session": engine.state,
                                       "result": result})]
            if verb in ("load_scenario", "set_mode", "reset"):
                replies.append(encode_message(engine.scenario_message()))
            return replies
        return [encode_message({"type": "error", "code": "type",
                                "detail": f"unknown message type {kind!r}"})]
    except ProtocolError as exc:
        err = {"type": "error", "code": exc.code, "detail": exc.detail}
        if exc.seq is not None:
            err["seq"] = exc.seq
        return [encode_message(err)]
    except ConfigError as exc:
        return [encode_message({"type": "error", "code": "config",
                                "detail": str(exc)})]


def build_app(engine: Optional[SessionEngine] = None,
              static_dir: Optional[str] = None,
              broadcast_period_s: Optional[float] = None):
    """FastAPI app with the websocket session endpoint and console assets."""
    if engine is None:
        engine = SessionEngine(default_scenario())
    if broadcast_period_s is None:
        # 10 steps of the 2 ms controller per frame -> 50 Hz
        broadcast_period_s = STEPS_PER_BROADCAST * 0.002
    app = FastAPI(title="teleosim session server")
    app.state.engine = engine

    @app.websocket("/session")
    async def session(ws: WebSocket):
        await ws.accept()
        await ws.send_text(encode_message(engine.scenario_message()))
        await ws.send_text(encode_message(engine.state_frame()))

        async def broadcaster():
            next_t = time.monotonic() + broadcast_period_s
            while True:
                frame = engine.advance()
                await ws.send_text(encode_message(frame))
                delay = next_t - time.monotonic()
                if delay < 0.0:
                    engine.dropped_frames += 1
                    next_t = time.monotonic() + broadcast_period_s
                    delay = 0.0
                else:
                    next_t += broadcast_period_s
                await asyncio.sleep(delay)

        task = asyncio.create_task(broadcaster())
        try:
            while True:
                text = await ws.receive_text()
                for reply in handle_text(engine, text):
                    await ws.send_text(reply)
        except WebSocketDisconnect:
            pass
        finally:
            task.cancel()
            engine.disconnect()

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="console")
    return app


def serve(host: str = "127.0.0.1", port: int = 8700,
          scenario: str = "default", static_dir: Optional[str] = None) -> None:
    import uvicorn

    cfg = default_scenario() if scenario in (None, "default") \
        else ScenarioConfig.load(scenario)
    engine = SessionEngine(cfg)
    if static_dir is None:
        candidate = os.path.join(os.path.dirname(__file__), "..", "..",
                                 "frontend")
        static_dir = candidate if os.path.isdir(candidate) else None
    app = build_app(engine, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
