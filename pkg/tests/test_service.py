"""Session engine, wire protocol and websocket endpoint."""

import json
import math

import pytest

from teleosim.episodes import MODE_SIMPLE, ReplayOperator, run_episode
from teleosim.scenario import default_scenario
from teleosim.service import (InputFrame, ProtocolError, SessionEngine,
                              SCHEMA_VERSION, STEPS_PER_BROADCAST, build_app,
                              decode_input, encode_message, handle_text)


def make_engine(**kw):
    return SessionEngine(default_scenario(), **kw)


def input_msg(seq, axes=(0.0, 0.0), gripper=1.0, **extra):
    doc = {"type": "input", "schema_version": SCHEMA_VERSION,
           "client_seq": seq, "axes": list(axes), "gripper": gripper,
           "client_time_ms": 123.0}
    doc.update(extra)
    return json.dumps(doc)


class TestProtocol:
    def test_decode_round_trip_canonical(self):
        m = input_msg(5, (0.25, -0.5), 0.75)
        f = decode_input(m)
        assert f == InputFrame(5, (0.25, -0.5), 0.75, 123.0)
        # canonical re-encoding normalizes field order
        out = encode_message({"type": "input", "client_seq": f.client_seq,
                              "axes": list(f.axes), "gripper": f.gripper,
                              "client_time_ms": f.client_time_ms})
        assert decode_input(out) == f
        assert out == encode_message(json.loads(out))

    def test_unknown_fields_ignored(self):
        f = decode_input(input_msg(1, extra_field="whatever"))
        assert f.client_seq == 1

    def test_version_mismatch(self):
        with pytest.raises(ProtocolError) as exc:
            decode_input(input_msg(1, schema_version=2))
        assert exc.value.code == "version"

    def test_missing_required_field(self):
        doc = json.loads(input_msg(1))
        del doc["gripper"]
        with pytest.raises(ProtocolError) as exc:
            decode_input(json.dumps(doc))
        assert exc.value.code == "missing-field"

    def test_malformed_json_error_frame(self):
        engine = make_engine()
        replies = handle_text(engine, "{not json")
        assert len(replies) == 1
        err = json.loads(replies[0])
        assert err["type"] == "error" and err["code"] == "malformed"

    def test_error_echoes_seq(self):
        engine = make_engine()
        replies = handle_text(engine, input_msg(7, schema_version=3))
        err = json.loads(replies[0])
        assert err["code"] == "version" and err["seq"] == 7


class TestEngine:
    def test_state_machine_happy_path(self):
        e = make_engine()
        assert e.state == "loaded"
        e.start()
        assert e.state == "running"
        e.pause()
        assert e.state == "paused"
        e.start()
        assert e.state == "running"
        e.reset()
        assert e.state == "loaded"

    def test_illegal_verbs_rejected_without_state_change(self):
        e = make_engine()
        with pytest.raises(ProtocolError) as exc:
            e.pause()  # not running
        assert exc.value.code == "illegal-state"
        assert e.state == "loaded"
        e.start()
        with pytest.raises(ProtocolError):
            e.command("set_mode", {"mode": MODE_SIMPLE})  # mode fixed mid-run
        assert e.state == "running"
        with pytest.raises(ProtocolError):
            e.command("save_replay", {})  # only when paused/completed
        assert e.state == "running"

    def test_stale_input_discarded(self):
        e = make_engine()
        assert e.ingest(InputFrame(3, (0.1, 0.0), 0.5))
        assert not e.ingest(InputFrame(3, (0.9, 0.0), 0.5))
        assert not e.ingest(InputFrame(2, (0.9, 0.0), 0.5))
        assert e.ingest(InputFrame(4, (0.2, 0.0), 0.5))
        assert e._held.axes == (0.2, 0.0)

    def test_input_clamped_server_side(self):
        e = make_engine()
        e.ingest(InputFrame(1, (2.0, -3.0), 1.7))
        assert e._held.axes == (1.0, -1.0)
        assert e._held.gripper == 1.0
        frame = e.state_frame()
        assert frame["input_clamped"] is True

    def test_advance_steps_fixed_batch(self):
        e = make_engine()
        e.start()
        e.ingest(InputFrame(1, (0.0, 0.0), 1.0))
        f1 = e.advance()
        assert e.stepper.k == STEPS_PER_BROADCAST
        f2 = e.advance()
        assert e.stepper.k == 2 * STEPS_PER_BROADCAST
        assert f2["seq"] == f1["seq"] + 1
        assert f2["t_s"] == pytest.approx(2 * STEPS_PER_BROADCAST * 0.002)

    def test_paused_broadcast_does_not_step(self):
        e = make_engine()
        e.start()
        e.advance()
        e.pause()
        k = e.stepper.k
        f = e.advance()
        assert e.stepper.k == k
        assert f["session"] == "paused"

    def test_disconnect_failsafe(self):
        e = make_engine()
        e.start()
        e.ingest(InputFrame(1, (0.8, 0.2), 0.6))
        e.advance()
        e.disconnect()
        assert e.state == "paused"
        assert e._held.axes == (0.0, 0.0)
        assert e._held.gripper == 0.6  # grip holds its last value

    def test_sample_and_hold_between_messages(self):
        e = make_engine()
        e.start()
        e.ingest(InputFrame(1, (0.5, 0.0), 1.0))
        for _ in range(5):
            e.advance()
        tilt = e.stepper.tilt
        assert tilt[0] == pytest.approx(0.5 * math.radians(20.0))

    def test_one_second_of_silence_keeps_autonomy_going(self):
        # open the grip once, then go quiet: centred stick is held and the
        # vehicle keeps following the path inside the region
        e = make_engine()
        e.start()
        e.ingest(InputFrame(1, (0.0, 0.0), 1.0))
        for _ in range(50):  # 1 s of broadcasts without any client input
            e.advance()
        assert e._held.axes == (0.0, 0.0)
        r = e.stepper.rows[-1]
        assert (r[12], r[13]) == (0.0, 0.0)  # u_human held at zero
        assert e.stepper.vehicle.pos[0] > 1.0  # moved under the path follower

    def test_completion(self):
        cfg = default_scenario()
        small = cfg.to_dict()
        small["path_points_m"] = [[0.0, 0.0], [0.2, 0.0]]
        small["areas"] = [{"label": "A", "start_m": 0.0, "end_m": 0.2}]
        small["obstacle"] = None
        from teleosim.scenario import ScenarioConfig
        e = SessionEngine(ScenarioConfig.from_dict(small))
        e.start()
        e.ingest(InputFrame(1, (1.0, 0.0), 1.0))
        for _ in range(200):
            e.advance()
            if e.state == "completed":
                break
        assert e.state == "completed"

    def test_save_replay_and_offline_reproduction(self, tmp_path):
        e = make_engine()
        e.start()
        seq = 0
        # scripted burst of live inputs across several broadcast periods
        inputs = [((0.6, 0.1), 1.0), ((0.9, -0.2), 0.8), ((0.3, 0.4), 0.5),
                  ((0.0, 0.0), 0.9)]
        for axes, grip in inputs:
            seq += 1
            e.ingest(InputFrame(seq, axes, grip))
            for _ in range(12):
                e.advance()
        e.pause()
        result = e.command("save_replay", {"name": "t", "out": str(tmp_path)})
        live = e.episode_log()
        replay = run_episode(e.scenario_cfg, mode=e.mode,
                             operator=f"replay:{result['input_log']}",
                             max_duration_s=live.footer["final_t_s"] + 0.001)
        n = min(live.steps, replay.steps)
        assert n == live.steps
        xa_live = live.array("xa_x_m", "xa_y_m")[:n]
        xa_replay = replay.array("xa_x_m", "xa_y_m")[:n]
        err = abs(xa_live - xa_replay).max()
        assert err <= 1e-9

    def test_mode_switch_rebuilds(self):
        e = make_engine()
        e.command("set_mode", {"mode": MODE_SIMPLE})
        assert e.mode == MODE_SIMPLE
        e.start()
        e.ingest(InputFrame(1, (0.5, 0.0), 1.0))
        e.advance()
        r = e.stepper.rows[-1]
        # simple mode: vehicle input equals the stick mapping
        assert (r[14], r[15]) == (r[12], r[13])


class TestWebSocket:
    def test_connect_stream_and_command(self):
        from fastapi.testclient import TestClient

        app = build_app(make_engine(), broadcast_period_s=0.005)
        client = TestClient(app)
        with client.websocket_connect("/session") as ws:
            first = json.loads(ws.receive_text())
            assert first["type"] == "scenario" and first["loaded"]
            second = json.loads(ws.receive_text())
            assert second["type"] == "state"
            ws.send_text(json.dumps({"type": "command",
                                     "schema_version": SCHEMA_VERSION,
                                     "verb": "start", "payload": {}}))
            got_ack = False
            running = False
            for _ in range(20):
                msg = json.loads(ws.receive_text())
                if msg["type"] == "ack" and msg["verb"] == "start":
                    got_ack = True
                if msg["type"] == "state" and msg["session"] == "running":
                    running = True
                    if got_ack:
                        break
            assert got_ack and running

    def test_input_clamp_echo_and_errors(self):
        from fastapi.testclient import TestClient

        app = build_app(make_engine(), broadcast_period_s=0.005)
        client = TestClient(app)
        with client.websocket_connect("/session") as ws:
            ws.receive_text()
            ws.receive_text()
            ws.send_text(json.dumps({"type": "command",
                                     "schema_version": SCHEMA_VERSION,
                                     "verb": "start", "payload": {}}))
            ws.send_text(input_msg(1, (2.0, -3.0), 1.0))
            clamped = False
            for _ in range(30):
                msg = json.loads(ws.receive_text())
                if msg["type"] == "state" and msg.get("input_clamped"):
                    clamped = True
                    break
            assert clamped
            ws.send_text("}{")
            for _ in range(30):
                msg = json.loads(ws.receive_text())
                if msg["type"] == "error":
                    assert msg["code"] == "malformed"
                    break
            else:
                pytest.fail("no error frame received")
