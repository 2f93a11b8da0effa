/**
 * Wire protocol: single JSON objects per websocket text frame, mirroring
 * the relay server's schema.
 */

import { ReplicaOp } from "./replica.js";

export interface JoinMessage {
  type: "join";
  session: string;
  participant: string;
  replica: string;
}

export interface SnapshotMessage {
  type: "snapshot";
  entries: ReplicaOp[];
}

export interface OpMessage extends ReplicaOp {
  type: "op";
}

export interface PresenceMessage {
  type: "presence";
  participant: string;
  seq: number;
  t_ms: number;
  payload: Record<string, unknown>;
}

export interface LeaveMessage {
  type: "leave";
  participant: string;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail?: string;
}

export type Message =
  | JoinMessage
  | SnapshotMessage
  | OpMessage
  | PresenceMessage
  | LeaveMessage
  | ErrorMessage;

export function encode(message: Message): string {
  return JSON.stringify(message);
}

export function decode(text: string): Message {
  let obj: any;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    return { type: "error", code: "malformed", detail: (err as Error).message };
  }
  if (typeof obj !== "object" || obj === null || typeof obj.type !== "string") {
    return { type: "error", code: "malformed", detail: "missing type" };
  }
  switch (obj.type) {
    case "join":
    case "snapshot":
    case "op":
    case "presence":
    case "leave":
    case "error":
      return obj as Message;
    default:
      return { type: "error", code: "malformed", detail: `unknown type ${obj.type}` };
  }
}

export function opMessage(op: ReplicaOp): OpMessage {
  return { type: "op", key: op.key, value: op.value, clock: op.clock, replica: op.replica };
}
