/**
 * Websocket session client: joins a two-party session, keeps a local
 * replicated Document in sync (snapshot on join, ops thereafter), relays
 * presence, and reconnects with exponential backoff, merging the server
 * snapshot on every rejoin.
 */

import { decode, encode, Message, opMessage, PresenceMessage } from "./protocol.js";
import { Document, ReplicaOp } from "./replica.js";

export type ConnectionState = "connecting" | "connected" | "reconnecting" | "closed";

export interface SessionClientOptions {
  url: string; // ws://host:port
  session: string;
  participant: string;
  doc: Document;
  onPresence?: (message: PresenceMessage) => void;
  onChange?: () => void; // any document mutation from the network
  onState?: (state: ConnectionState) => void;
  onError?: (code: string, detail?: string) => void;
  /** Injectable for tests; defaults to the browser/Node global. */
  socketFactory?: (url: string) => WebSocket;
  maxBackoffMs?: number;
}

export class SessionClient {
  private opts: SessionClientOptions;
  private ws: WebSocket | null = null;
  private state: ConnectionState = "closed";
  private backoffMs = 1000;
  private closedByUser = false;
  private presenceSeq = 0;
  private snapshotWaiters: (() => void)[] = [];
  snapshotCount = 0;

  constructor(opts: SessionClientOptions) {
    this.opts = opts;
  }

  connect(): void {
    this.closedByUser = false;
    this.open();
  }

  /** Resolves once the server snapshot for the current join has merged. */
  waitForSnapshot(): Promise<void> {
    return new Promise((resolve) => {
      if (this.snapshotCount > 0) resolve();
      else this.snapshotWaiters.push(resolve);
    });
  }

  private open(): void {
    this.setState(this.snapshotCount > 0 ? "reconnecting" : "connecting");
    const factory =
      this.opts.socketFactory ?? ((url: string) => new WebSocket(url));
    const ws = factory(`${this.opts.url}/session/${this.opts.session}`);
    this.ws = ws;

    ws.onopen = () => {
      this.backoffMs = 1000;
      ws.send(
        encode({
          type: "join",
          session: this.opts.session,
          participant: this.opts.participant,
          replica: this.opts.doc.replicaId,
        }),
      );
    };
    ws.onmessage = (event: MessageEvent) => {
      this.handle(decode(String(event.data)));
    };
    ws.onclose = () => {
      if (this.closedByUser) {
        this.setState("closed");
        return;
      }
      this.setState("reconnecting");
      const delay = this.backoffMs;
      this.backoffMs = Math.min(this.backoffMs * 2, this.opts.maxBackoffMs ?? 30000);
      setTimeout(() => {
        if (!this.closedByUser) this.open();
      }, delay);
    };
    ws.onerror = () => {
      // close handler drives the retry
    };
  }

  private handle(message: Message): void {
    switch (message.type) {
      case "snapshot": {
        this.opts.doc.mergeSnapshot(message.entries);
        this.snapshotCount += 1;
        this.setState("connected");
        const waiters = this.snapshotWaiters;
        this.snapshotWaiters = [];
        waiters.forEach((resolve) => resolve());
        this.opts.onChange?.();
        break;
      }
      case "op": {
        this.opts.doc.applyRemote({
          key: message.key,
          value: message.value,
          clock: message.clock,
          replica: message.replica,
        });
        this.opts.onChange?.();
        break;
      }
      case "presence":
        this.opts.onPresence?.(message);
        break;
      case "error":
        this.opts.onError?.(message.code, message.detail);
        break;
      case "leave":
        this.opts.onChange?.();
        break;
      default:
        break;
    }
  }

  sendOp(op: ReplicaOp): void {
    if (this.ws && this.ws.readyState === 1) {
      this.ws.send(encode(opMessage(op)));
    }
  }

  sendOps(ops: ReplicaOp[]): void {
    for (const op of ops) this.sendOp(op);
  }

  sendPresence(tMs: number, payload: Record<string, unknown>): void {
    if (this.ws && this.ws.readyState === 1) {
      this.presenceSeq += 1;
      this.ws.send(
        encode({
          type: "presence",
          participant: this.opts.participant,
          seq: this.presenceSeq,
          t_ms: tMs,
          payload,
        }),
      );
    }
  }

  close(): void {
    this.closedByUser = true;
    if (this.ws && this.ws.readyState === 1) {
      this.ws.send(encode({ type: "leave", participant: this.opts.participant }));
    }
    this.ws?.close();
    this.setState("closed");
  }

  connectionState(): ConnectionState {
    return this.state;
  }

  private setState(state: ConnectionState): void {
    if (state !== this.state) {
      this.state = state;
      this.opts.onState?.(state);
    }
  }
}
