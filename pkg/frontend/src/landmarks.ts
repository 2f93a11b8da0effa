/**
 * Hand-landmark model and trace parsing, mirroring the relay core's
 * conventions: 21 points per hand, normalized camera-fraction coordinates,
 * and a one-time horizontal mirror at ingestion so both participants share
 * one scene coordinate space.
 */

export const WRIST = 0;
export const THUMB_TIP = 4;
export const INDEX_TIP = 8;
export const MIDDLE_TIP = 12;
export const RING_TIP = 16;
export const PINKY_TIP = 20;
export const INDEX_BASE = 5;
export const MIDDLE_BASE = 9;
export const RING_BASE = 13;
export const PINKY_BASE = 17;
export const INDEX_MID = 6;
export const MIDDLE_MID = 10;
export const RING_MID = 14;
export const PINKY_MID = 18;

export const FINGERTIPS = [THUMB_TIP, INDEX_TIP, MIDDLE_TIP, RING_TIP, PINKY_TIP];
export const LANDMARK_COUNT = 21;
export const COORD_SLACK = 0.25;

export type Handedness = "Left" | "Right";
export const HANDS: Handedness[] = ["Left", "Right"];

export interface Landmark {
  x: number;
  y: number;
  z: number;
}

export interface HandFrame {
  handedness: Handedness;
  points: Landmark[]; // exactly 21, fixed topology order
}

export interface FramePacket {
  tMs: number;
  participant: string;
  hands: HandFrame[]; // 0-2, distinct handedness
}

export class TraceParseError extends Error {}

export function dist2d(a: Landmark, b: Landmark): number {
  const dx = a.x - b.x;
  const dy = a.y - b.y;
  return Math.sqrt(dx * dx + dy * dy);
}

export function handScale(hand: HandFrame): number {
  const scale = dist2d(hand.points[WRIST], hand.points[MIDDLE_BASE]);
  if (scale <= 0) {
    throw new TraceParseError("wrist and middle-finger base coincide");
  }
  return scale;
}

export function mirror(packet: FramePacket): FramePacket {
  return {
    tMs: packet.tMs,
    participant: packet.participant,
    hands: packet.hands.map((hand) => ({
      handedness: hand.handedness,
      points: hand.points.map((p) => ({ x: 1.0 - p.x, y: p.y, z: p.z })),
    })),
  };
}

export function handOf(packet: FramePacket, side: Handedness): HandFrame | null {
  for (const hand of packet.hands) {
    if (hand.handedness === side) return hand;
  }
  return null;
}

function inFrame(p: Landmark): boolean {
  const lo = -COORD_SLACK;
  const hi = 1.0 + COORD_SLACK;
  return p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi;
}

/** Parse one trace record; out-of-frame hands are dropped, bad shape throws. */
export function parseTraceRecord(line: string): FramePacket {
  let obj: any;
  try {
    obj = JSON.parse(line);
  } catch (err) {
    throw new TraceParseError(`record: invalid JSON (${(err as Error).message})`);
  }
  if (typeof obj !== "object" || obj === null) {
    throw new TraceParseError("record: expected JSON object");
  }
  if (!Number.isInteger(obj.t_ms)) throw new TraceParseError("t_ms: expected integer");
  if (typeof obj.participant !== "string" || !obj.participant) {
    throw new TraceParseError("participant: expected non-empty string");
  }
  if (!Array.isArray(obj.hands) || obj.hands.length > 2) {
    throw new TraceParseError("hands: expected array of at most 2");
  }
  const hands: HandFrame[] = [];
  const seen = new Set<string>();
  for (let i = 0; i < obj.hands.length; i++) {
    const raw = obj.hands[i];
    if (raw.handedness !== "Left" && raw.handedness !== "Right") {
      throw new TraceParseError(`hands[${i}].handedness: unknown value`);
    }
    if (seen.has(raw.handedness)) {
      throw new TraceParseError(`hands[${i}].handedness: duplicate ${raw.handedness}`);
    }
    seen.add(raw.handedness);
    if (!Array.isArray(raw.landmarks) || raw.landmarks.length !== LANDMARK_COUNT) {
      throw new TraceParseError(
        `landmarks: expected ${LANDMARK_COUNT}, got ${raw.landmarks?.length ?? 0}`,
      );
    }
    const points: Landmark[] = [];
    for (let j = 0; j < LANDMARK_COUNT; j++) {
      const triple = raw.landmarks[j];
      if (!Array.isArray(triple) || triple.length !== 3) {
        throw new TraceParseError(`hands[${i}].landmarks[${j}]: expected [x, y, z]`);
      }
      const [x, y, z] = triple;
      for (const [name, v] of [["x", x], ["y", y], ["z", z]] as const) {
        if (typeof v !== "number" || !Number.isFinite(v)) {
          throw new TraceParseError(`hands[${i}].landmarks[${j}].${name}: not finite`);
        }
      }
      points.push({ x, y, z });
    }
    if (points.every(inFrame)) {
      hands.push({ handedness: raw.handedness, points });
    }
  }
  return { tMs: obj.t_ms, participant: obj.participant, hands };
}

export function parseTrace(text: string): FramePacket[] {
  const packets: FramePacket[] = [];
  let lastT = new Map<string, number>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const packet = parseTraceRecord(line);
    const prev = lastT.get(packet.participant);
    if (prev !== undefined && packet.tMs < prev) {
      throw new TraceParseError(`line ${i + 1}: t_ms ${packet.tMs} precedes ${prev}`);
    }
    lastT.set(packet.participant, packet.tMs);
    packets.push(packet);
  }
  return packets;
}

/** Canonical record form, for recording live sessions to trace files. */
export function serializeTraceRecord(packet: FramePacket): string {
  return JSON.stringify({
    t_ms: packet.tMs,
    participant: packet.participant,
    hands: packet.hands.map((hand) => ({
      handedness: hand.handedness,
      landmarks: hand.points.map((p) => [p.x, p.y, p.z]),
    })),
  });
}
