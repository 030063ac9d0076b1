// Wiring: DOM, websocket, 60 Hz input sender, render loop.

import { FrameSender, sampleInput, SEND_HZ } from "./input.js";
import { Ctx, renderScene, startRenderLoop } from "./render.js";
import { SessionClient, sessionUrl } from "./session.js";
import { createViewModel, verbAllowed } from "./state.js";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d") as unknown as Ctx;
const vm = createViewModel();
const client = new SessionClient(vm);
const sender = new FrameSender();

const keys = new Set<string>();
let pendingSlider: number | null = null;
let grip = 1.0;

window.addEventListener("keydown", (ev) => {
  keys.add(ev.code);
  if (["ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight", "Space"].includes(ev.code)) {
    ev.preventDefault();
  }
});
window.addEventListener("keyup", (ev) => keys.delete(ev.code));

const gripSlider = document.getElementById("grip") as HTMLInputElement;
gripSlider.addEventListener("input", () => {
  pendingSlider = Number(gripSlider.value) / 100;
});

function button(id: string): HTMLButtonElement {
  return document.getElementById(id) as HTMLButtonElement;
}

const buttons = {
  start: button("start"),
  pause: button("pause"),
  reset: button("reset"),
  save: button("save"),
  mode: button("mode"),
  scenario: button("scenario"),
};

buttons.start.onclick = () => client.command("start");
buttons.pause.onclick = () => client.command("pause");
buttons.reset.onclick = () => client.command("reset");
buttons.save.onclick = () => client.command("save_replay", {});
buttons.mode.onclick = () => {
  const next = vm.mode === "proposed" ? "simple-hsc" : "proposed";
  client.command("set_mode", { mode: next });
};
buttons.scenario.onclick = () =>
  client.command("load_scenario", { scenario: "default" });

function refreshControls(): void {
  buttons.start.disabled = !verbAllowed("start", vm.session);
  buttons.pause.disabled = !verbAllowed("pause", vm.session);
  buttons.reset.disabled = !verbAllowed("reset", vm.session);
  buttons.save.disabled = !verbAllowed("save_replay", vm.session);
  buttons.mode.disabled = !verbAllowed("set_mode", vm.session);
  buttons.scenario.disabled = !verbAllowed("load_scenario", vm.session);
  const status = document.getElementById("status")!;
  status.textContent = `${vm.connection} | session ${vm.session} | mode ${vm.mode}`;
}

client.connect(sessionUrl(window.location), (url) => new WebSocket(url));

// 60 Hz input frames while the session runs
let lastSampleMs = performance.now();
setInterval(() => {
  const nowMs = performance.now();
  const dtS = (nowMs - lastSampleMs) / 1000;
  lastSampleMs = nowMs;
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  const pad = pads && pads[0] ? pads[0] : null;
  const sample = sampleInput(
    { keys, gamepad: pad, sliderGrip: pendingSlider },
    grip,
    dtS,
  );
  pendingSlider = null;
  grip = sample.gripper;
  gripSlider.value = String(Math.round(grip * 100));
  if (vm.session === "running") {
    client.sendRaw(sender.next(sample.axes, grip, Date.now()));
  }
  refreshControls();
}, 1000 / SEND_HZ);

startRenderLoop(
  (cb) => requestAnimationFrame(cb),
  () => renderScene(ctx, vm, canvas.width, canvas.height, Date.now()),
);
