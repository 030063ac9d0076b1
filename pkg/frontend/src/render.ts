// Canvas renderer.  Pure function of the view model: no simulation here.
// The 2d context is typed structurally so tests can record calls.

import { StateFrame, Vec2 } from "./protocol.js";
import { activeToasts, isStalled, ViewModel } from "./state.js";

export interface Ctx {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  textAlign: CanvasTextAlign;
  save(): void;
  restore(): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  setLineDash(segments: number[]): void;
  fillText(text: string, x: number, y: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

const AREA_COLORS: Record<string, string> = {
  A: "#2f4d6e",
  B: "#6e4d2f",
  C: "#4d2f6e",
};

export interface Camera {
  cx: number; // world centre [m]
  cy: number;
  scale: number; // px per m
}

export function cameraFor(frame: StateFrame | null, w: number, h: number): Camera {
  const scale = 34;
  if (frame?.vehicle) {
    return { cx: frame.vehicle[0] + 4, cy: frame.vehicle[1], scale };
  }
  return { cx: 8, cy: 1, scale };
}

export function worldToScreen(cam: Camera, w: number, h: number, p: Vec2): Vec2 {
  // world y up, screen y down
  return [
    w / 2 + (p[0] - cam.cx) * cam.scale,
    h / 2 - (p[1] - cam.cy) * cam.scale,
  ];
}

function arrow(ctx: Ctx, cam: Camera, w: number, h: number, from: Vec2,
               vel: Vec2, gain: number, color: string): void {
  const mag = Math.hypot(vel[0], vel[1]);
  if (mag < 1e-3) return;
  const to: Vec2 = [from[0] + vel[0] * gain, from[1] + vel[1] * gain];
  const a = worldToScreen(cam, w, h, from);
  const b = worldToScreen(cam, w, h, to);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(a[0], a[1]);
  ctx.lineTo(b[0], b[1]);
  ctx.stroke();
  const ang = Math.atan2(b[1] - a[1], b[0] - a[0]);
  ctx.beginPath();
  ctx.moveTo(b[0], b[1]);
  ctx.lineTo(b[0] - 7 * Math.cos(ang - 0.4), b[1] - 7 * Math.sin(ang - 0.4));
  ctx.lineTo(b[0] - 7 * Math.cos(ang + 0.4), b[1] - 7 * Math.sin(ang + 0.4));
  ctx.fill();
  ctx.fillStyle = color;
}

function pathWithAreas(ctx: Ctx, cam: Camera, w: number, h: number,
                       vm: ViewModel): void {
  const scenario = vm.scenario;
  if (!scenario?.path || scenario.path.length < 2) return;
  const pts = scenario.path;
  const cum: number[] = [0];
  for (let i = 1; i < pts.length; i++) {
    cum.push(cum[i - 1] + Math.hypot(pts[i][0] - pts[i - 1][0],
                                     pts[i][1] - pts[i - 1][1]));
  }
  const areas = scenario.areas ?? [];
  for (const area of areas) {
    ctx.strokeStyle = AREA_COLORS[area.label] ?? "#3a3a3a";
    ctx.lineWidth = 10;
    ctx.globalAlpha = 0.35;
    ctx.beginPath();
    let started = false;
    for (let i = 0; i < pts.length; i++) {
      if (cum[i] < area.start_m || cum[i] > area.end_m) continue;
      const s = worldToScreen(cam, w, h, pts[i]);
      if (!started) {
        ctx.moveTo(s[0], s[1]);
        started = true;
      } else {
        ctx.lineTo(s[0], s[1]);
      }
    }
    ctx.stroke();
    ctx.globalAlpha = 1;
  }
  ctx.strokeStyle = "#9fb6cc";
  ctx.lineWidth = 1.5;
  ctx.setLineDash([6, 4]);
  ctx.beginPath();
  const first = worldToScreen(cam, w, h, pts[0]);
  ctx.moveTo(first[0], first[1]);
  for (let i = 1; i < pts.length; i++) {
    const s = worldToScreen(cam, w, h, pts[i]);
    ctx.lineTo(s[0], s[1]);
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

function trail(ctx: Ctx, cam: Camera, w: number, h: number, pts: Vec2[],
               color: string): void {
  if (pts.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.globalAlpha = 0.6;
  ctx.beginPath();
  const first = worldToScreen(cam, w, h, pts[0]);
  ctx.moveTo(first[0], first[1]);
  for (let i = 1; i < pts.length; i++) {
    const s = worldToScreen(cam, w, h, pts[i]);
    ctx.lineTo(s[0], s[1]);
  }
  ctx.stroke();
  ctx.globalAlpha = 1;
}

export function renderScene(ctx: Ctx, vm: ViewModel, w: number, h: number,
                            nowMs: number): void {
  ctx.fillStyle = "#10151b";
  ctx.fillRect(0, 0, w, h);
  const frame = vm.frame;
  const cam = cameraFor(frame, w, h);

  pathWithAreas(ctx, cam, w, h, vm);
  trail(ctx, cam, w, h, vm.goalTrail, "#3f9e53");
  trail(ctx, cam, w, h, vm.vehicleTrail, "#d1495b");

  if (vm.scenario?.obstacle && frame?.obstacle) {
    const half = vm.scenario.obstacle.half_extents;
    const pos = frame.obstacle.position;
    const a = worldToScreen(cam, w, h, [pos[0] - half[0], pos[1] + half[1]]);
    ctx.fillStyle = frame.obstacle.active ? "#d98e32" : "#6b7b4f";
    ctx.fillRect(a[0], a[1], 2 * half[0] * cam.scale, 2 * half[1] * cam.scale);
  }

  if (frame?.goal && frame.radius_m !== undefined) {
    const c = worldToScreen(cam, w, h, frame.goal);
    // region boundary; stroke intensity cues the filter correction magnitude
    const ub = frame.u_barrier ?? [0, 0];
    const cue = Math.min(1, Math.hypot(ub[0], ub[1]) / 2);
    ctx.strokeStyle = `rgba(${Math.round(80 + 175 * cue)}, ${Math.round(
      200 - 120 * cue)}, 90, 0.9)`;
    ctx.lineWidth = 2 + 4 * cue;
    ctx.beginPath();
    ctx.arc(c[0], c[1], Math.max(frame.radius_m * cam.scale, 1), 0,
            2 * Math.PI);
    ctx.stroke();
    // goal marker
    ctx.fillStyle = "#3f9e53";
    ctx.beginPath();
    ctx.arc(c[0], c[1], 5, 0, 2 * Math.PI);
    ctx.fill();
  }

  if (frame?.vehicle) {
    const v = worldToScreen(cam, w, h, frame.vehicle);
    const r = (vm.scenario?.vehicle_radius_m ?? 0.3) * cam.scale;
    ctx.fillStyle = "#d1495b";
    ctx.beginPath();
    ctx.arc(v[0], v[1], Math.max(r, 4), 0, 2 * Math.PI);
    ctx.fill();
    arrow(ctx, cam, w, h, frame.vehicle, frame.u_auto ?? [0, 0], 1.2, "#4f9dde");
    arrow(ctx, cam, w, h, frame.vehicle, frame.u_barrier ?? [0, 0], 1.2, "#e0a23f");
    if (frame.goal) {
      arrow(ctx, cam, w, h, frame.goal, frame.u_human ?? [0, 0], 1.2, "#3f9e53");
    }
  }

  // HUD
  ctx.font = "13px monospace";
  ctx.textAlign = "left";
  ctx.fillStyle = "#cfd8e3";
  const metrics = frame?.metrics;
  const hud = [
    `session ${vm.session}  mode ${vm.mode}  area ${frame?.area ?? "-"}`,
    `t ${frame?.t_s?.toFixed(2) ?? "-"} s  rmse ${
      metrics?.rmse_m == null ? "-" : metrics.rmse_m.toFixed(3)} m  ` +
      `collisions ${metrics?.collisions ?? 0}  dropped ${frame?.dropped_frames ?? 0}`,
  ];
  hud.forEach((line, i) => ctx.fillText(line, 12, 20 + 16 * i));

  // authority indicator: autonomous while the filter is quiet inside the
  // region, shared/human once it engages
  const authority = vm.authority;
  ctx.fillStyle = authority === "autonomous" ? "#3f9e53" : "#e0a23f";
  ctx.fillRect(w - 190, 10, 180, 26);
  ctx.fillStyle = "#10151b";
  ctx.textAlign = "left";
  ctx.fillText(authority === "autonomous" ? "AUTONOMOUS" : "SHARED / HUMAN",
               w - 178, 28);

  if (frame?.input_clamped) {
    ctx.fillStyle = "#d98e32";
    ctx.fillText("input clamped", w - 178, 52);
  }

  activeToasts(vm, nowMs).forEach((t, i) => {
    ctx.fillStyle = "#d98e32";
    ctx.fillText(t.text, 12, h - 14 - 16 * i);
  });

  if (isStalled(vm, nowMs)) {
    ctx.fillStyle = "rgba(16, 21, 27, 0.75)";
    ctx.fillRect(0, 0, w, h);
    ctx.fillStyle = "#d1495b";
    ctx.font = "28px monospace";
    ctx.textAlign = "left";
    ctx.fillText("STALLED - no state frames", w / 2 - 180, h / 2);
  }
}

export type RafFn = (cb: (tMs: number) => void) => void;

export interface RenderLoop {
  stop(): void;
  frames(): number;
}

// Renders the latest frame every animation tick; dropped StateFrames thin the
// trail but never queue up or distort positions.
export function startRenderLoop(
  raf: RafFn,
  draw: (tMs: number) => void,
): RenderLoop {
  let running = true;
  let count = 0;
  const tick = (tMs: number) => {
    if (!running) return;
    draw(tMs);
    count += 1;
    raf(tick);
  };
  raf(tick);
  return {
    stop: () => {
      running = false;
    },
    frames: () => count,
  };
}
