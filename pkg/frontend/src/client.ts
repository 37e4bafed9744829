/**
 * WebSocket session against the control service with reconnect
 * backoff. The socket constructor is injectable so tests can run under
 * Node; in the browser the global WebSocket is used.
 *
 * Sending is refused unless the session is connected - this is the
 * enforcement point for the "no motion while disconnected" invariant.
 */

import { encodeCommand, parseServerMessage } from "./protocol.js";
import type { Command, ServerMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  socketFactory?: SocketFactory;
  initialBackoffMs?: number;
  maxBackoffMs?: number;
  onMessage?: (msg: ServerMessage) => void;
  onState?: (state: "connected" | "reconnecting" | "down") => void;
}

function defaultFactory(url: string): SocketLike {
  const ctor = (globalThis as { WebSocket?: new (url: string) => SocketLike }).WebSocket;
  if (!ctor) throw new Error("no WebSocket constructor available");
  return new ctor(url);
}

export class ServiceClient {
  private socket: SocketLike | null = null;
  private connected = false;
  private closedByUser = false;
  private backoff: number;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;

  constructor(
    readonly url: string,
    private readonly opts: ClientOptions = {},
  ) {
    this.backoff = opts.initialBackoffMs ?? 500;
  }

  get isConnected(): boolean {
    return this.connected;
  }

  nextId(prefix: string): string {
    this.seq += 1;
    return `${prefix}-${this.seq}`;
  }

  connect(): void {
    this.closedByUser = false;
    this.open();
  }

  private open(): void {
    const factory = this.opts.socketFactory ?? defaultFactory;
    let sock: SocketLike;
    try {
      sock = factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = sock;
    sock.onopen = () => {
      this.connected = true;
      this.backoff = this.opts.initialBackoffMs ?? 500;
      this.opts.onState?.("connected");
    };
    sock.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg) this.opts.onMessage?.(msg);
    };
    sock.onerror = () => {
      // close follows; handled there
    };
    sock.onclose = () => {
      const wasConnected = this.connected;
      this.connected = false;
      this.socket = null;
      if (this.closedByUser) {
        this.opts.onState?.("down");
        return;
      }
      this.opts.onState?.(wasConnected ? "reconnecting" : "down");
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.closedByUser || this.reconnectTimer) return;
    this.opts.onState?.("reconnecting");
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.open();
    }, this.backoff);
    this.backoff = Math.min(this.backoff * 2, this.opts.maxBackoffMs ?? 5000);
  }

  send(cmd: Command): void {
    if (!this.connected || !this.socket) {
      throw new Error("not connected: refusing to send");
    }
    this.socket.send(encodeCommand(cmd));
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.connected = false;
    this.socket?.close();
    this.socket = null;
    this.opts.onState?.("down");
  }
}
