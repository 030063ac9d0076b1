// Test doubles: recording canvas context and a scriptable socket.

import { SCHEMA_VERSION } from "../src/protocol.js";
import { SocketLike } from "../src/session.js";

export function encodeMessageLikeServer(doc: Record<string, unknown>): string {
  return JSON.stringify({ schema_version: SCHEMA_VERSION, ...doc });
}

export interface CtxStub {
  texts: string[];
  calls: string[];
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  textAlign: string;
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

export function makeCtxStub(): CtxStub {
  const calls: string[] = [];
  const texts: string[] = [];
  const record = (name: string) => () => {
    calls.push(name);
  };
  return {
    texts,
    calls,
    fillStyle: "",
    strokeStyle: "",
    lineWidth: 1,
    font: "",
    globalAlpha: 1,
    textAlign: "left",
    save: record("save"),
    restore: record("restore"),
    beginPath: record("beginPath"),
    moveTo: record("moveTo"),
    lineTo: record("lineTo"),
    arc: record("arc"),
    rect: record("rect"),
    fill: record("fill"),
    stroke: record("stroke"),
    fillRect: record("fillRect"),
    setLineDash: record("setLineDash"),
    fillText(text: string) {
      calls.push("fillText");
      texts.push(text);
    },
    clearRect: record("clearRect"),
  };
}

export interface SocketStub extends SocketLike {
  sent: string[];
  closed: boolean;
}

export function makeSocketStub(): SocketStub {
  return {
    sent: [],
    closed: false,
    send(text: string) {
      this.sent.push(text);
    },
    close() {
      this.closed = true;
    },
    onopen: null,
    onmessage: null,
    onclose: null,
    onerror: null,
  };
}
