// View model: everything rendered comes from server StateFrames.  The console
// never simulates physics, so it can never disagree with the server about
// where the vehicle is.

import {
  ParseResult,
  ScenarioMsg,
  ServerMessage,
  StateFrame,
  Vec2,
} from "./protocol.js";

export const TRAIL_MAX = 300;
export const STALL_MS = 500;

export type Authority = "autonomous" | "shared";
export type Connection = "connecting" | "open" | "closed";

export interface Toast {
  text: string;
  atMs: number;
}

export interface ViewModel {
  connection: Connection;
  session: string;
  mode: string;
  frame: StateFrame | null;
  scenario: ScenarioMsg | null;
  vehicleTrail: Vec2[];
  goalTrail: Vec2[];
  lastFrameAtMs: number;
  lastSeq: number;
  authority: Authority;
  authorityFlips: number;
  versionDrops: number;
  staleDrops: number;
  toasts: Toast[];
  lastReplay: string | null;
}

export function createViewModel(): ViewModel {
  return {
    connection: "connecting",
    session: "unknown",
    mode: "proposed",
    frame: null,
    scenario: null,
    vehicleTrail: [],
    goalTrail: [],
    lastFrameAtMs: 0,
    lastSeq: -1,
    authority: "autonomous",
    authorityFlips: 0,
    versionDrops: 0,
    staleDrops: 0,
    toasts: [],
    lastReplay: null,
  };
}

export function authorityOf(frame: StateFrame): Authority {
  return frame.engaged ? "shared" : "autonomous";
}

function pushTrail(trail: Vec2[], p: Vec2): void {
  trail.push([p[0], p[1]]);
  if (trail.length > TRAIL_MAX) {
    trail.splice(0, trail.length - TRAIL_MAX);
  }
}

export function applyParsed(vm: ViewModel, parsed: ParseResult, nowMs: number): void {
  if (parsed.versionMismatch) {
    vm.versionDrops += 1;
    return;
  }
  if (parsed.message !== null) {
    applyMessage(vm, parsed.message, nowMs);
  }
}

export function applyMessage(vm: ViewModel, msg: ServerMessage, nowMs: number): void {
  switch (msg.type) {
    case "state": {
      if (msg.seq <= vm.lastSeq) {
        vm.staleDrops += 1;
        return;
      }
      vm.lastSeq = msg.seq;
      vm.frame = msg;
      vm.lastFrameAtMs = nowMs;
      vm.session = msg.session;
      if (msg.mode) {
        vm.mode = msg.mode;
      }
      if (msg.vehicle) {
        pushTrail(vm.vehicleTrail, msg.vehicle);
      }
      if (msg.goal) {
        pushTrail(vm.goalTrail, msg.goal);
      }
      const authority = authorityOf(msg);
      if (authority !== vm.authority) {
        vm.authority = authority;
        vm.authorityFlips += 1;
      }
      return;
    }
    case "scenario": {
      vm.scenario = msg;
      if (msg.session) {
        vm.session = msg.session;
      }
      if (msg.mode) {
        vm.mode = msg.mode;
      }
      vm.vehicleTrail = [];
      vm.goalTrail = [];
      return;
    }
    case "ack": {
      vm.session = msg.session;
      if (msg.verb === "save_replay" && msg.result) {
        const file = (msg.result as Record<string, unknown>).episode_csv;
        vm.lastReplay = typeof file === "string" ? file : null;
        pushToast(vm, `replay saved: ${vm.lastReplay ?? "?"}`, nowMs);
      }
      if (msg.verb === "set_mode" && msg.result) {
        const mode = (msg.result as Record<string, unknown>).mode;
        if (typeof mode === "string") {
          vm.mode = mode;
        }
      }
      return;
    }
    case "error": {
      pushToast(vm, `${msg.code}: ${msg.detail}`, nowMs);
      return;
    }
  }
}

export function pushToast(vm: ViewModel, text: string, nowMs: number): void {
  vm.toasts.push({ text, atMs: nowMs });
  if (vm.toasts.length > 5) {
    vm.toasts.splice(0, vm.toasts.length - 5);
  }
}

export function activeToasts(vm: ViewModel, nowMs: number, ttlMs = 4000): Toast[] {
  return vm.toasts.filter((t) => nowMs - t.atMs < ttlMs);
}

export function isStalled(vm: ViewModel, nowMs: number): boolean {
  return vm.frame !== null && nowMs - vm.lastFrameAtMs > STALL_MS;
}

// Mirror of the server's session state machine so controls disable instead of
// producing rejected commands.
const VERB_STATES: Record<string, string[]> = {
  load_scenario: ["idle", "loaded", "completed"],
  set_mode: ["idle", "loaded"],
  start: ["loaded", "paused"],
  pause: ["running"],
  reset: ["loaded", "running", "paused", "completed"],
  save_replay: ["paused", "completed"],
};

export function verbAllowed(verb: string, session: string): boolean {
  const states = VERB_STATES[verb];
  return states !== undefined && states.includes(session);
}
