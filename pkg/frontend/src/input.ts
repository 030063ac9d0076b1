// Operator input: keyboard (WASD/arrows + Q/E grip), gamepad (left stick +
// trigger), or the grip slider.  Frames go out at 60 Hz with a monotonic
// client_seq; the server clamps regardless of what we send.

import { encodeInput, Vec2 } from "./protocol.js";

export const GAMEPAD_DEAD_ZONE = 0.05;
export const SEND_HZ = 60;
export const GRIP_RATE_PER_S = 0.8; // Q/E grip speed, full range in 1.25 s

export function applyDeadZone(v: number, dz: number = GAMEPAD_DEAD_ZONE): number {
  return Math.abs(v) < dz ? 0 : v;
}

// axes[0]: +right/-left (world x), axes[1]: +up/-down (world y)
export function axesFromKeys(keys: ReadonlySet<string>): Vec2 {
  let x = 0;
  let y = 0;
  if (keys.has("KeyD") || keys.has("ArrowRight")) x += 1;
  if (keys.has("KeyA") || keys.has("ArrowLeft")) x -= 1;
  if (keys.has("KeyW") || keys.has("ArrowUp")) y += 1;
  if (keys.has("KeyS") || keys.has("ArrowDown")) y -= 1;
  return [x, y];
}

export function gripFromKeys(
  current: number,
  keys: ReadonlySet<string>,
  dtS: number,
): number {
  let grip = current;
  if (keys.has("KeyQ")) grip -= GRIP_RATE_PER_S * dtS; // close
  if (keys.has("KeyE")) grip += GRIP_RATE_PER_S * dtS; // open
  return Math.min(1, Math.max(0, grip));
}

export interface GamepadLike {
  axes: ReadonlyArray<number>;
  buttons: ReadonlyArray<{ value: number }>;
}

// Left stick: screen-up is negative on gamepad axis 1, flip to world +y.
export function gamepadAxes(gp: GamepadLike | null): Vec2 | null {
  if (!gp || gp.axes.length < 2) return null;
  const x = applyDeadZone(gp.axes[0]);
  const y = applyDeadZone(-gp.axes[1]);
  if (x === 0 && y === 0) return null;
  return [Math.max(-1, Math.min(1, x)), Math.max(-1, Math.min(1, y))];
}

// Right trigger opens the grip fully when pressed.
export function gamepadGrip(gp: GamepadLike | null): number | null {
  if (!gp || gp.buttons.length < 8) return null;
  const v = gp.buttons[7].value;
  return v > 0 ? Math.min(1, v) : null;
}

export class FrameSender {
  private seq = 0;

  next(axes: Vec2, gripper: number, nowMs: number): string {
    this.seq += 1;
    return encodeInput(this.seq, axes, gripper, nowMs);
  }

  get lastSeq(): number {
    return this.seq;
  }
}

export interface InputSources {
  keys: ReadonlySet<string>;
  gamepad: GamepadLike | null;
  sliderGrip: number | null; // non-null when the slider moved most recently
}

export interface InputSample {
  axes: Vec2;
  gripper: number;
}

// Gamepad stick wins over keys when deflected; slider/trigger/keys merge for
// the grip with "most recent writer" handled by the caller via sliderGrip.
export function sampleInput(
  sources: InputSources,
  prevGrip: number,
  dtS: number,
): InputSample {
  const fromPad = gamepadAxes(sources.gamepad);
  const axes = fromPad ?? axesFromKeys(sources.keys);
  let grip = gripFromKeys(prevGrip, sources.keys, dtS);
  const trigger = gamepadGrip(sources.gamepad);
  if (trigger !== null) {
    grip = trigger;
  } else if (sources.sliderGrip !== null) {
    grip = Math.min(1, Math.max(0, sources.sliderGrip));
  }
  return { axes, gripper: grip };
}
