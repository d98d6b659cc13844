// Socket wrapper: owns the reducer state, sends whatever the reducer asks,
// reconnects with a fixed delay. The socket implementation is injected so
// reconnect behavior is testable without a browser.

import { Command } from "./protocol.js";
import { Reduction, ViewEvent, ViewState, initialState, reduce } from "./viewmodel.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  reconnectDelayMs?: number;
  now?: () => number;
  schedule?: (fn: () => void, ms: number) => unknown;
}

export class ConsoleClient {
  state: ViewState = initialState();
  onchange: ((state: ViewState) => void) | null = null;

  private socket: SocketLike | null = null;
  private disposed = false;
  private readonly delay: number;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    options: ClientOptions = {},
  ) {
    this.delay = options.reconnectDelayMs ?? 1000;
    this.now = options.now ?? (() => Date.now());
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  }

  connect(): void {
    if (this.disposed) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => this.dispatch({ kind: "socket-open", at: this.now() });
    socket.onmessage = (event) =>
      this.dispatch({ kind: "message", raw: event.data, at: this.now() });
    socket.onclose = () => {
      this.dispatch({ kind: "socket-closed", at: this.now() });
      if (!this.disposed) {
        this.schedule(() => this.connect(), this.delay);
      }
    };
  }

  dispose(): void {
    this.disposed = true;
    this.socket?.close();
  }

  rate(robotId: number, level: number): void {
    this.dispatch({ kind: "rate", robotId, level, at: this.now() });
  }

  command(command: Command): void {
    this.dispatch({ kind: "command", command });
  }

  dispatch(event: ViewEvent): void {
    const result: Reduction = reduce(this.state, event);
    this.state = result.state;
    for (const command of result.send) {
      try {
        this.socket?.send(JSON.stringify(command));
      } catch {
        // socket died mid-send; the close handler will queue a reconnect
      }
    }
    this.onchange?.(this.state);
  }
}
