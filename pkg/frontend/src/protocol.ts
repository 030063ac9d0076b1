// Wire protocol for the session websocket: JSON text, schema_version 1.
// The console renders only frames whose schema_version it acknowledges.

export const SCHEMA_VERSION = 1;

export type Vec2 = [number, number];

export interface StateFrame {
  type: "state";
  schema_version: number;
  seq: number;
  session: string;
  mode?: string;
  t_s?: number;
  vehicle?: Vec2;
  goal?: Vec2;
  radius_m?: number;
  radius_cmd_m?: number;
  u_auto?: Vec2;
  u_barrier?: Vec2;
  u_human?: Vec2;
  u_vehicle?: Vec2;
  barrier?: number;
  engaged?: boolean;
  area?: string;
  obstacle?: { position: Vec2; active: boolean } | null;
  device?: { tilt: Vec2; grip_rad: number };
  torque_guidance?: Vec2;
  input_clamped?: boolean;
  dropped_frames?: number;
  metrics?: {
    rmse_m: number | null;
    collisions: number;
    elapsed_s: number;
    completed: boolean;
  };
}

export interface ScenarioMsg {
  type: "scenario";
  schema_version: number;
  loaded: boolean;
  name?: string;
  mode?: string;
  session?: string;
  path?: Vec2[];
  areas?: { label: string; start_m: number; end_m: number }[];
  obstacle?: { home: Vec2; half_extents: Vec2 } | null;
  vehicle_radius_m?: number;
}

export interface AckMsg {
  type: "ack";
  schema_version: number;
  verb: string;
  session: string;
  result?: Record<string, unknown>;
}

export interface ErrorMsg {
  type: "error";
  schema_version: number;
  code: string;
  detail: string;
  seq?: number;
}

export type ServerMessage = StateFrame | ScenarioMsg | AckMsg | ErrorMsg;

export interface ParseResult {
  message: ServerMessage | null;
  versionMismatch: boolean;
}

export function parseServerMessage(text: string): ParseResult {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return { message: null, versionMismatch: false };
  }
  if (typeof doc !== "object" || doc === null) {
    return { message: null, versionMismatch: false };
  }
  const msg = doc as Record<string, unknown>;
  if (typeof msg.type !== "string") {
    return { message: null, versionMismatch: false };
  }
  if (msg.schema_version !== SCHEMA_VERSION) {
    return { message: null, versionMismatch: true };
  }
  if (!["state", "scenario", "ack", "error"].includes(msg.type)) {
    return { message: null, versionMismatch: false };
  }
  return { message: msg as unknown as ServerMessage, versionMismatch: false };
}

export function encodeInput(
  clientSeq: number,
  axes: Vec2,
  gripper: number,
  clientTimeMs: number,
): string {
  return JSON.stringify({
    type: "input",
    schema_version: SCHEMA_VERSION,
    client_seq: clientSeq,
    axes: [axes[0], axes[1]],
    gripper,
    client_time_ms: clientTimeMs,
  });
}

export function encodeCommand(
  verb: string,
  payload: Record<string, unknown> = {},
): string {
  return JSON.stringify({
    type: "command",
    schema_version: SCHEMA_VERSION,
    verb,
    payload,
  });
}
