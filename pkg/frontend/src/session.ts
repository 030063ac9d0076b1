// Websocket wrapper: parse inbound messages into the view model, expose
// command senders gated by the mirrored session state machine.

import { encodeCommand, parseServerMessage } from "./protocol.js";
import { applyParsed, pushToast, verbAllowed, ViewModel } from "./state.js";

export interface SocketLike {
  send(text: string): void;
  close(): void;
  // `any` events keep the native WebSocket assignable under strict mode
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class SessionClient {
  private socket: SocketLike | null = null;

  constructor(
    public readonly vm: ViewModel,
    private readonly now: () => number = () => Date.now(),
  ) {}

  connect(url: string, factory: SocketFactory): void {
    const socket = factory(url);
    this.socket = socket;
    this.vm.connection = "connecting";
    socket.onopen = () => {
      this.vm.connection = "open";
    };
    socket.onmessage = (ev: { data: string }) => {
      applyParsed(this.vm, parseServerMessage(ev.data), this.now());
    };
    socket.onclose = () => {
      this.vm.connection = "closed";
    };
    socket.onerror = () => {
      pushToast(this.vm, "socket error", this.now());
    };
  }

  get connected(): boolean {
    return this.vm.connection === "open";
  }

  sendRaw(text: string): boolean {
    if (!this.socket || this.vm.connection !== "open") return false;
    this.socket.send(text);
    return true;
  }

  command(verb: string, payload: Record<string, unknown> = {}): boolean {
    if (!verbAllowed(verb, this.vm.session)) {
      return false; // control should have been disabled
    }
    return this.sendRaw(encodeCommand(verb, payload));
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
    this.vm.connection = "closed";
  }
}

export function sessionUrl(loc: { protocol: string; host: string }): string {
  const proto = loc.protocol === "https:" ? "wss" : "ws";
  const host = loc.host || "127.0.0.1:8700";
  return `${proto}://${host}/session`;
}
