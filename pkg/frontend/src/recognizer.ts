/**
 * Geometric hand-shape classification plus the per-hand and bimanual
 * gesture state machines. This implements the same contract as the relay
 * core's recognizer and is conformance-tested record-for-record against
 * its golden event logs, so every arithmetic step here intentionally
 * mirrors that implementation (IEEE doubles behave identically).
 */

import {
  FINGERTIPS,
  FramePacket,
  HandFrame,
  Handedness,
  HANDS,
  INDEX_BASE,
  INDEX_MID,
  INDEX_TIP,
  MIDDLE_BASE,
  MIDDLE_MID,
  MIDDLE_TIP,
  PINKY_BASE,
  PINKY_MID,
  PINKY_TIP,
  RING_BASE,
  RING_MID,
  RING_TIP,
  THUMB_TIP,
  WRIST,
  dist2d,
  handOf,
  handScale,
} from "./landmarks.js";

export interface RecognizerConfig {
  extensionRatio: number;
  thumbRatio: number;
  pinchRatio: number;
  spreadGapRatio: number;
  requirePalmFacing: boolean;
  debounceFrames: number;
  dwellMs: number;
  tapMaxMs: number;
  tapMoveTolerance: number;
  panGain: number;
  zoomMin: number;
  zoomMax: number;
}

export const DEFAULT_CONFIG: RecognizerConfig = {
  extensionRatio: 1.3,
  thumbRatio: 0.7,
  pinchRatio: 0.25,
  spreadGapRatio: 0.25,
  requirePalmFacing: false,
  debounceFrames: 3,
  dwellMs: 1000,
  tapMaxMs: 400,
  tapMoveTolerance: 0.02,
  panGain: 1.0,
  zoomMin: 0.25,
  zoomMax: 8.0,
};

export type HandShape =
  | "Point"
  | "PointThumbOut"
  | "Spread"
  | "Pinch"
  | "Fist"
  | "Other"
  | "Absent";

export type GestureKindName =
  | "EphemeralPoint"
  | "PersistTap"
  | "Marquee"
  | "PinchBegin"
  | "PinchMove"
  | "PinchEnd"
  | "ConnectHold"
  | "PanBegin"
  | "PanMove"
  | "PanEnd"
  | "ZoomBegin"
  | "ZoomMove"
  | "ZoomEnd"
  | "HandIdle";

export interface GestureEvent {
  t_ms: number;
  participant: string;
  hand: Handedness;
  kind: GestureKindName;
  payload: Record<string, unknown>;
}

export interface Circle {
  center: [number, number];
  radius: number;
}

type Point2 = [number, number];

const IDLE_SHAPES: ReadonlySet<HandShape> = new Set(["Fist", "Other", "Absent"]);

const FINGERS = ["Thumb", "Index", "Middle", "Ring", "Pinky"] as const;
export type Finger = (typeof FINGERS)[number];

const FINGER_TIP_MID: Record<Exclude<Finger, "Thumb">, [number, number]> = {
  Index: [INDEX_TIP, INDEX_MID],
  Middle: [MIDDLE_TIP, MIDDLE_MID],
  Ring: [RING_TIP, RING_MID],
  Pinky: [PINKY_TIP, PINKY_MID],
};

export function fingerExtended(
  hand: HandFrame,
  finger: Finger,
  cfg: RecognizerConfig = DEFAULT_CONFIG,
): boolean {
  if (finger === "Thumb") {
    const gap = dist2d(hand.points[THUMB_TIP], hand.points[INDEX_BASE]);
    return gap > cfg.thumbRatio * handScale(hand);
  }
  const [tip, mid] = FINGER_TIP_MID[finger];
  const wrist = hand.points[WRIST];
  return (
    dist2d(hand.points[tip], wrist) > cfg.extensionRatio * dist2d(hand.points[mid], wrist)
  );
}

function palmTowardCamera(hand: HandFrame): boolean {
  const w = hand.points[WRIST];
  const ib = hand.points[INDEX_BASE];
  const pb = hand.points[PINKY_BASE];
  const cross = (ib.x - w.x) * (pb.y - w.y) - (ib.y - w.y) * (pb.x - w.x);
  return (cross < 0.0) === (hand.handedness === "Right");
}

export function classifyShape(
  hand: HandFrame,
  cfg: RecognizerConfig = DEFAULT_CONFIG,
): HandShape {
  const scale = handScale(hand);
  const ext: Record<Finger, boolean> = {
    Thumb: fingerExtended(hand, "Thumb", cfg),
    Index: fingerExtended(hand, "Index", cfg),
    Middle: fingerExtended(hand, "Middle", cfg),
    Ring: fingerExtended(hand, "Ring", cfg),
    Pinky: fingerExtended(hand, "Pinky", cfg),
  };

  // Pinch first: the closed thumb-index ring defeats the other tests.
  const pinchGap = dist2d(hand.points[THUMB_TIP], hand.points[INDEX_TIP]);
  if (pinchGap < cfg.pinchRatio * scale && ext.Middle && ext.Ring && ext.Pinky) {
    return "Pinch";
  }
  if (!ext.Thumb && !ext.Index && !ext.Middle && !ext.Ring && !ext.Pinky) {
    return "Fist";
  }
  if (ext.Index && !ext.Middle && !ext.Ring && !ext.Pinky) {
    return ext.Thumb ? "PointThumbOut" : "Point";
  }
  if (ext.Thumb && ext.Index && ext.Middle && ext.Ring && ext.Pinky) {
    const tips = FINGERTIPS.map((i) => hand.points[i]);
    let minGap = Infinity;
    for (let i = 0; i < tips.length; i++) {
      for (let j = i + 1; j < tips.length; j++) {
        const d = dist2d(tips[i], tips[j]);
        if (d < minGap) minGap = d;
      }
    }
    if (minGap > cfg.spreadGapRatio * scale && (!cfg.requirePalmFacing || palmTowardCamera(hand))) {
      return "Spread";
    }
  }
  return "Other";
}

export function fingertipCircle(hand: HandFrame): Circle {
  let sx = 0.0;
  let sy = 0.0;
  for (const i of FINGERTIPS) {
    sx += hand.points[i].x;
    sy += hand.points[i].y;
  }
  const cx = sx / 5.0;
  const cy = sy / 5.0;
  let radius = -Infinity;
  for (const i of FINGERTIPS) {
    const dx = hand.points[i].x - cx;
    const dy = hand.points[i].y - cy;
    const d = Math.sqrt(dx * dx + dy * dy);
    if (d > radius) radius = d;
  }
  return { center: [cx, cy], radius };
}

export function marquee(hand: HandFrame, cfg: RecognizerConfig = DEFAULT_CONFIG): Circle {
  if (classifyShape(hand, cfg) !== "Spread") {
    throw new Error("marquee requires a Spread hand");
  }
  return fingertipCircle(hand);
}

function pinchCursor(hand: HandFrame): Point2 {
  const a = hand.points[THUMB_TIP];
  const b = hand.points[INDEX_TIP];
  return [(a.x + b.x) / 2.0, (a.y + b.y) / 2.0];
}

function palmCenter(hand: HandFrame): Point2 {
  const ids = [WRIST, INDEX_BASE, MIDDLE_BASE, RING_BASE, PINKY_BASE];
  let sx = 0.0;
  let sy = 0.0;
  for (const i of ids) {
    sx += hand.points[i].x;
    sy += hand.points[i].y;
  }
  return [sx / ids.length, sy / ids.length];
}

interface HandTrack {
  shape: HandShape;
  shapeSinceMs: number;
  rawCandidate: HandShape;
  rawCount: number;
  rawSinceMs: number;
  lastPointCursor: Point2 | null;
  tapAnchor: Point2 | null;
  tapStartedMs: number;
  tapCancelled: boolean;
  spreadFired: boolean;
  pinchActive: boolean;
  pinchBeginFrame: number;
  frame: HandFrame | null;
}

function newTrack(): HandTrack {
  return {
    shape: "Absent",
    shapeSinceMs: 0,
    rawCandidate: "Absent",
    rawCount: 0,
    rawSinceMs: 0,
    lastPointCursor: null,
    tapAnchor: null,
    tapStartedMs: 0,
    tapCancelled: false,
    spreadFired: false,
    pinchActive: false,
    pinchBeginFrame: -1,
    frame: null,
  };
}

export class Recognizer {
  readonly participant: string;
  readonly cfg: RecognizerConfig;
  private tracks: Record<Handedness, HandTrack>;
  private lastTMs: number | null = null;
  private frameNo = -1;
  private mode: "pan" | "zoom" | null = null;
  private panHand: Handedness | null = null;
  private panPrev: Point2 | null = null;
  private zoomSinceMs: number | null = null;
  private zoomD0 = 0.0;
  private lastBothFistEndMs: number | null = null;
  private connectSinceMs: number | null = null;
  private connectFired = false;

  constructor(participant: string, cfg: RecognizerConfig = DEFAULT_CONFIG) {
    this.participant = participant;
    this.cfg = cfg;
    this.tracks = { Left: newTrack(), Right: newTrack() };
  }

  step(packet: FramePacket): GestureEvent[] {
    if (packet.participant !== this.participant) {
      throw new Error(`packet for ${packet.participant} fed to ${this.participant}`);
    }
    if (this.lastTMs !== null && packet.tMs < this.lastTMs) {
      throw new Error(`t_ms ${packet.tMs} precedes ${this.lastTMs}`);
    }
    this.lastTMs = packet.tMs;
    this.frameNo += 1;
    const t = packet.tMs;

    const events: GestureEvent[] = [];
    for (const side of HANDS) {
      this.debounce(side, handOf(packet, side), t, events);
    }
    this.bimanual(t, events);
    for (const side of HANDS) {
      this.perFrame(side, t, events);
    }
    return events;
  }

  finish(tMs?: number): GestureEvent[] {
    const t = tMs ?? this.lastTMs ?? 0;
    const events: GestureEvent[] = [];
    for (const side of HANDS) {
      const track = this.tracks[side];
      if (track.pinchActive) {
        events.push(this.event(t, side, "PinchEnd"));
        track.pinchActive = false;
      }
    }
    if (this.mode === "pan" && this.panHand !== null) {
      events.push(this.event(t, this.panHand, "PanEnd"));
    } else if (this.mode === "zoom") {
      events.push(this.event(t, "Left", "ZoomEnd"));
    }
    this.mode = null;
    this.panHand = null;
    return events;
  }

  shape(side: Handedness): HandShape {
    return this.tracks[side].shape;
  }

  dwellProgress(side: Handedness): number {
    const t = this.lastTMs;
    if (t === null) return 0.0;
    const track = this.tracks[side];
    let base: number | null = null;
    if (track.shape === "Fist") {
      if (this.mode === "pan" || this.mode === "zoom") return 1.0;
      base = this.both("Fist") ? this.zoomSinceMs : this.panBase(side);
    } else if (track.shape === "Spread" && !track.spreadFired) {
      base = track.shapeSinceMs;
    } else if (track.shape === "Pinch" && this.both("Pinch")) {
      if (this.connectFired) return 1.0;
      base = this.connectSinceMs;
    }
    if (base === null) return 0.0;
    return Math.max(0.0, Math.min(1.0, (t - base) / this.cfg.dwellMs));
  }

  private event(
    t: number,
    hand: Handedness,
    kind: GestureKindName,
    payload: Record<string, unknown> = {},
  ): GestureEvent {
    return { t_ms: t, participant: this.participant, hand, kind, payload };
  }

  private classify(frame: HandFrame | null): HandShape {
    if (frame === null) return "Absent";
    try {
      return classifyShape(frame, this.cfg);
    } catch {
      return "Other"; // degenerate geometry must not break the stream
    }
  }

  private debounce(
    side: Handedness,
    frame: HandFrame | null,
    t: number,
    events: GestureEvent[],
  ): void {
    const track = this.tracks[side];
    track.frame = frame;
    const raw = this.classify(frame);
    if (raw === track.rawCandidate) {
      track.rawCount += 1;
    } else {
      track.rawCandidate = raw;
      track.rawCount = 1;
      track.rawSinceMs = t;
    }
    if (track.rawCount >= this.cfg.debounceFrames && raw !== track.shape) {
      this.transition(side, track, raw, track.rawSinceMs, t, events);
    }
  }

  private transition(
    side: Handedness,
    track: HandTrack,
    next: HandShape,
    since: number,
    t: number,
    events: GestureEvent[],
  ): void {
    const old = track.shape;

    if (old === "Pinch" && track.pinchActive) {
      events.push(this.event(t, side, "PinchEnd"));
      track.pinchActive = false;
      this.connectSinceMs = null;
      this.connectFired = false;
    }
    if (old === "Spread") {
      track.spreadFired = false;
    }

    if (old === "Point" && next === "PointThumbOut") {
      track.tapAnchor = track.lastPointCursor;
      track.tapStartedMs = since;
      track.tapCancelled = track.tapAnchor === null;
    } else if (old === "PointThumbOut") {
      if (
        next === "Point" &&
        !track.tapCancelled &&
        track.tapAnchor !== null &&
        since - track.tapStartedMs <= this.cfg.tapMaxMs
      ) {
        events.push(
          this.event(t, side, "PersistTap", { cursor: [track.tapAnchor[0], track.tapAnchor[1]] }),
        );
      }
      track.tapAnchor = null;
      track.tapCancelled = false;
    }

    if (next === "Pinch") {
      track.pinchActive = true;
      track.pinchBeginFrame = this.frameNo;
      const cursor = track.frame ? pinchCursor(track.frame) : ([0.0, 0.0] as Point2);
      events.push(this.event(t, side, "PinchBegin", { cursor: [cursor[0], cursor[1]] }));
    }
    if (IDLE_SHAPES.has(next) && !IDLE_SHAPES.has(old)) {
      events.push(this.event(t, side, "HandIdle"));
    }

    track.shape = next;
    track.shapeSinceMs = since;
  }

  private both(shape: HandShape): boolean {
    return this.tracks.Left.shape === shape && this.tracks.Right.shape === shape;
  }

  private panBase(side: Handedness): number {
    let base = this.tracks[side].shapeSinceMs;
    if (this.lastBothFistEndMs !== null && this.lastBothFistEndMs > base) {
      base = this.lastBothFistEndMs;
    }
    return base;
  }

  private fistPos(side: Handedness): Point2 | null {
    const frame = this.tracks[side].frame;
    return frame !== null ? palmCenter(frame) : null;
  }

  private bimanual(t: number, events: GestureEvent[]): void {
    const cfg = this.cfg;
    const bothFist = this.both("Fist");

    if (this.mode === "pan") {
      const owner = this.panHand;
      if (owner === null || this.tracks[owner].shape !== "Fist" || bothFist) {
        events.push(this.event(t, owner ?? "Left", "PanEnd"));
        this.mode = null;
        this.panHand = null;
        this.panPrev = null;
      }
    }
    if (this.mode === "zoom" && !bothFist) {
      events.push(this.event(t, "Left", "ZoomEnd"));
      this.mode = null;
    }

    if (bothFist) {
      if (this.zoomSinceMs === null) {
        this.zoomSinceMs = Math.max(
          this.tracks.Left.shapeSinceMs,
          this.tracks.Right.shapeSinceMs,
        );
      }
      if (this.mode === null && t - this.zoomSinceMs >= cfg.dwellMs) {
        const left = this.fistPos("Left");
        const right = this.fistPos("Right");
        if (left !== null && right !== null) {
          const dx = left[0] - right[0];
          const dy = left[1] - right[1];
          this.mode = "zoom";
          this.zoomD0 = Math.max(Math.sqrt(dx * dx + dy * dy), 1e-9);
          events.push(this.event(t, "Left", "ZoomBegin"));
        }
      } else if (this.mode === "zoom") {
        const left = this.fistPos("Left");
        const right = this.fistPos("Right");
        if (left !== null && right !== null) {
          const dx = left[0] - right[0];
          const dy = left[1] - right[1];
          const d = Math.sqrt(dx * dx + dy * dy);
          const factor = Math.min(Math.max(d / this.zoomD0, cfg.zoomMin), cfg.zoomMax);
          const anchor: Point2 = [(left[0] + right[0]) / 2.0, (left[1] + right[1]) / 2.0];
          events.push(
            this.event(t, "Left", "ZoomMove", { factor, anchor: [anchor[0], anchor[1]] }),
          );
        }
      }
    } else {
      if (this.zoomSinceMs !== null) {
        this.lastBothFistEndMs = t;
      }
      this.zoomSinceMs = null;
    }

    if (!bothFist && this.mode === null) {
      for (const side of HANDS) {
        if (this.tracks[side].shape !== "Fist") continue;
        if (t - this.panBase(side) >= cfg.dwellMs) {
          const pos = this.fistPos(side);
          if (pos !== null) {
            this.mode = "pan";
            this.panHand = side;
            this.panPrev = pos;
            events.push(this.event(t, side, "PanBegin"));
          }
        }
        break; // at most one lone fist can qualify
      }
    }
    if (this.mode === "pan" && this.panHand !== null && this.panPrev !== null) {
      const pos = this.fistPos(this.panHand);
      if (pos !== null && (pos[0] !== this.panPrev[0] || pos[1] !== this.panPrev[1])) {
        const delta: Point2 = [
          (pos[0] - this.panPrev[0]) * cfg.panGain,
          (pos[1] - this.panPrev[1]) * cfg.panGain,
        ];
        events.push(
          this.event(t, this.panHand, "PanMove", { delta: [delta[0], delta[1]] }),
        );
        this.panPrev = pos;
      }
    }

    if (this.both("Pinch")) {
      if (this.connectSinceMs === null) {
        this.connectSinceMs = Math.max(
          this.tracks.Left.shapeSinceMs,
          this.tracks.Right.shapeSinceMs,
        );
      }
      const leftFrame = this.tracks.Left.frame;
      const rightFrame = this.tracks.Right.frame;
      if (
        !this.connectFired &&
        t - this.connectSinceMs >= cfg.dwellMs &&
        leftFrame !== null &&
        rightFrame !== null
      ) {
        this.connectFired = true;
        const a = pinchCursor(leftFrame);
        const b = pinchCursor(rightFrame);
        events.push(
          this.event(t, "Left", "ConnectHold", {
            cursor_a: [a[0], a[1]],
            cursor_b: [b[0], b[1]],
          }),
        );
      }
    } else {
      this.connectSinceMs = null;
      this.connectFired = false;
    }
  }

  private perFrame(side: Handedness, t: number, events: GestureEvent[]): void {
    const track = this.tracks[side];
    const frame = track.frame;
    if (frame === null) return;
    const shape = track.shape;

    if (shape === "Point") {
      const tip = frame.points[INDEX_TIP];
      const cursor: Point2 = [tip.x, tip.y];
      track.lastPointCursor = cursor;
      events.push(this.event(t, side, "EphemeralPoint", { cursor: [cursor[0], cursor[1]] }));
    } else if (shape === "PointThumbOut") {
      if (track.tapAnchor !== null && !track.tapCancelled) {
        const tip = frame.points[INDEX_TIP];
        const dx = tip.x - track.tapAnchor[0];
        const dy = tip.y - track.tapAnchor[1];
        if (Math.sqrt(dx * dx + dy * dy) > this.cfg.tapMoveTolerance) {
          track.tapCancelled = true;
        }
      }
    } else if (shape === "Spread") {
      const circle = fingertipCircle(frame);
      events.push(
        this.event(t, side, "Marquee", {
          center: [circle.center[0], circle.center[1]],
          radius: circle.radius,
          persistent: false,
        }),
      );
      if (!track.spreadFired && t - track.shapeSinceMs >= this.cfg.dwellMs) {
        track.spreadFired = true;
        events.push(
          this.event(t, side, "Marquee", {
            center: [circle.center[0], circle.center[1]],
            radius: circle.radius,
            persistent: true,
          }),
        );
      }
    } else if (shape === "Pinch" && track.pinchActive) {
      if (this.frameNo !== track.pinchBeginFrame) {
        const cursor = pinchCursor(frame);
        events.push(this.event(t, side, "PinchMove", { cursor: [cursor[0], cursor[1]] }));
      }
    }
  }
}
