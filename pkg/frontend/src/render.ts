/**
 * Layered compositing. Three fixed layers, back to front:
 *
 *   1. remote-partner layer: the peer's relayed hand skeleton in grayscale
 *      (stand-in for partner video, which keeps the visual aids salient);
 *   2. scene layer: the shared visualization, identical for both
 *      participants given the same document state;
 *   3. local feedback layer: bright green skeletal mesh of the local
 *      hands, dwell-progress ring at the wrist, orange marquee circle.
 *
 * The scene layer is built as a serializable draw list first and then
 * painted, so a fixed (document, presence) snapshot always yields an
 * identical vector description.
 */

import { FramePacket, Handedness, WRIST } from "./landmarks.js";
import { Circle } from "./recognizer.js";
import { Point2, SceneDoc, toScreen } from "./scene.js";

export interface DrawItem {
  op: "circle" | "line" | "rect" | "text" | "arc";
  x: number;
  y: number;
  x2?: number;
  y2?: number;
  r?: number;
  w?: number;
  h?: number;
  text?: string;
  fill?: string;
  stroke?: string;
  width?: number;
  alpha?: number;
}

export const COLORS = {
  airport: "#3b82f6",
  node: "#64748b",
  edge: "#94a3b8",
  flightArc: "#a855f7",
  fineSelect: "#f59e0b",
  coarseSelect: "#fb923c",
  remoteSelect: "#22d3ee",
  widget: "#1f2937",
  widgetText: "#e5e7eb",
  localMesh: "#22c55e",
  dwellRing: "#4ade80",
  marquee: "#fb923c",
  remoteSkeleton: "#9ca3af",
};

// Bone pairs of the 21-point hand topology, for skeletal meshes.
export const HAND_BONES: [number, number][] = [
  [0, 1], [1, 2], [2, 3], [3, 4],
  [0, 5], [5, 6], [6, 7], [7, 8],
  [5, 9], [9, 10], [10, 11], [11, 12],
  [9, 13], [13, 14], [14, 15], [15, 16],
  [13, 17], [17, 18], [18, 19], [19, 20],
  [0, 17],
];

export interface FlightRow {
  origin: string;
  dest: string;
  airline: string;
  cost: number;
  duration_min: number;
  depart_day: number;
}

export interface SceneViewState {
  flights?: FlightRow[];
  histograms?: { label: string; counts: number[] }[];
  highlightPath?: string[];
}

/** Deterministic vector description of the shared scene layer. */
export function buildSceneDrawList(scene: SceneDoc, view: SceneViewState = {}): DrawItem[] {
  const items: DrawItem[] = [];
  const vp = scene.viewport();
  const at = (p: Point2): Point2 => toScreen(vp, p);

  const selectedIds = new Set<string>();
  for (const sel of scene.selections().values()) {
    for (const id of sel.ids) selectedIds.add(id);
  }
  const pathNodes = new Set(view.highlightPath ?? []);

  for (const [a, b] of scene.edges()) {
    if (!scene.scenario.elements.has(a) || !scene.scenario.elements.has(b)) continue;
    const [ax, ay] = at(scene.position(a));
    const [bx, by] = at(scene.position(b));
    const onPath = pathNodes.has(a) && pathNodes.has(b);
    items.push({
      op: "line",
      x: ax,
      y: ay,
      x2: bx,
      y2: by,
      stroke: onPath ? COLORS.fineSelect : COLORS.edge,
      width: onPath ? 3 : 1,
    });
  }

  // Flight arcs between selected origins and destinations.
  if (view.flights) {
    for (const flight of view.flights) {
      const origin = scene.scenario.elements.get(flight.origin);
      const dest = scene.scenario.elements.get(flight.dest);
      if (!origin || !dest) continue;
      const [ax, ay] = at(scene.position(flight.origin));
      const [bx, by] = at(scene.position(flight.dest));
      items.push({
        op: "arc",
        x: ax,
        y: ay,
        x2: bx,
        y2: by,
        stroke: COLORS.flightArc,
        width: 1.5,
        alpha: 0.8,
      });
    }
  }

  for (const el of scene.currentElements()) {
    const [x, y] = at(scene.position(el.id));
    if (el.kind === "Airport" || el.kind === "Node") {
      items.push({
        op: "circle",
        x,
        y,
        r: el.radius * vp.scale,
        fill: el.kind === "Airport" ? COLORS.airport : COLORS.node,
      });
      if (selectedIds.has(el.id)) {
        items.push({
          op: "circle",
          x,
          y,
          r: el.radius * vp.scale + 0.006,
          stroke: COLORS.fineSelect,
          width: 2,
        });
      }
      if (el.kind === "Airport") {
        items.push({
          op: "text",
          x,
          y: y - el.radius * vp.scale - 0.008,
          text: el.id,
          fill: COLORS.widgetText,
        });
      }
    } else if (el.kind === "ListWidget") {
      const w = el.radius * 2.4;
      const rows = view.flights ?? [];
      const visible = el.payload.rows_visible ?? 8;
      const offset = scene.scrollOffset(el.id);
      items.push({
        op: "rect",
        x: x - w / 2,
        y: y - el.radius,
        w,
        h: el.radius * 2,
        fill: COLORS.widget,
        alpha: 0.9,
      });
      rows.slice(offset, offset + visible).forEach((flight, i) => {
        items.push({
          op: "text",
          x: x - w / 2 + 0.008,
          y: y - el.radius + 0.02 + i * 0.022,
          text: `${flight.origin}-${flight.dest} ${flight.airline} $${flight.cost} d${flight.depart_day}`,
          fill: COLORS.widgetText,
        });
      });
    } else if (el.kind === "SwitcherWidget") {
      items.push({
        op: "rect",
        x: x - el.radius,
        y: y - el.radius / 2,
        w: el.radius * 2,
        h: el.radius,
        fill: COLORS.widget,
        alpha: 0.9,
      });
      items.push({
        op: "text",
        x: x - el.radius + 0.006,
        y,
        text: scene.widgetOption(el.id) ?? "",
        fill: COLORS.widgetText,
      });
    }
  }

  // Histograms under the list widget, one row of bars per measure.
  if (view.histograms?.length) {
    let hy = 0.62;
    for (const hist of view.histograms) {
      const maxCount = Math.max(1, ...hist.counts);
      items.push({ op: "text", x: 0.02, y: hy - 0.015, text: hist.label, fill: COLORS.widgetText });
      hist.counts.forEach((count, i) => {
        const h = 0.04 * (count / maxCount);
        items.push({
          op: "rect",
          x: 0.02 + i * 0.012,
          y: hy - h,
          w: 0.01,
          h,
          fill: COLORS.airport,
        });
      });
      hy += 0.07;
    }
  }

  return items;
}

export interface HandPresence {
  shape?: string;
  cursor?: [number, number];
  dwell?: number;
  skeleton?: [number, number, number][];
}

export interface PresenceSnapshot {
  hands: Record<string, HandPresence>;
}

function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  skeleton: [number, number, number][],
  sx: number,
  sy: number,
  color: string,
  lineWidth: number,
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = lineWidth;
  ctx.beginPath();
  for (const [a, b] of HAND_BONES) {
    if (a >= skeleton.length || b >= skeleton.length) continue;
    ctx.moveTo(skeleton[a][0] * sx, skeleton[a][1] * sy);
    ctx.lineTo(skeleton[b][0] * sx, skeleton[b][1] * sy);
  }
  ctx.stroke();
  ctx.fillStyle = color;
  for (const [x, y] of skeleton) {
    ctx.beginPath();
    ctx.arc(x * sx, y * sy, 2.5, 0, Math.PI * 2);
    ctx.fill();
  }
}

export class LayerStack {
  constructor(
    private remote: HTMLCanvasElement,
    private scene: HTMLCanvasElement,
    private local: HTMLCanvasElement,
  ) {}

  /** Back layer: grayscale remote skeleton as the partner stand-in. */
  paintRemote(presence: PresenceSnapshot | null): void {
    const ctx = this.remote.getContext("2d")!;
    const { width, height } = this.remote;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#111418";
    ctx.fillRect(0, 0, width, height);
    if (!presence) {
      ctx.fillStyle = "#374151";
      ctx.font = "16px system-ui";
      ctx.textAlign = "center";
      ctx.fillText("waiting for partner", width / 2, height / 2);
      return;
    }
    ctx.filter = "grayscale(1)";
    for (const hand of Object.values(presence.hands)) {
      if (hand.skeleton) {
        drawSkeleton(ctx, hand.skeleton, width, height, COLORS.remoteSkeleton, 3);
      }
    }
    ctx.filter = "none";
  }

  /** Middle layer: the shared scene from its deterministic draw list. */
  paintScene(items: DrawItem[]): void {
    const ctx = this.scene.getContext("2d")!;
    const { width, height } = this.scene;
    ctx.clearRect(0, 0, width, height);
    for (const item of items) {
      ctx.globalAlpha = item.alpha ?? 1;
      switch (item.op) {
        case "circle": {
          ctx.beginPath();
          ctx.arc(item.x * width, item.y * height, (item.r ?? 0.01) * width, 0, Math.PI * 2);
          if (item.fill) {
            ctx.fillStyle = item.fill;
            ctx.fill();
          }
          if (item.stroke) {
            ctx.strokeStyle = item.stroke;
            ctx.lineWidth = item.width ?? 1;
            ctx.stroke();
          }
          break;
        }
        case "line": {
          ctx.beginPath();
          ctx.moveTo(item.x * width, item.y * height);
          ctx.lineTo((item.x2 ?? 0) * width, (item.y2 ?? 0) * height);
          ctx.strokeStyle = item.stroke ?? "#fff";
          ctx.lineWidth = item.width ?? 1;
          ctx.stroke();
          break;
        }
        case "arc": {
          const x1 = item.x * width;
          const y1 = item.y * height;
          const x2 = (item.x2 ?? 0) * width;
          const y2 = (item.y2 ?? 0) * height;
          const mx = (x1 + x2) / 2;
          const my = (y1 + y2) / 2 - Math.abs(x2 - x1) * 0.2 - 20;
          ctx.beginPath();
          ctx.moveTo(x1, y1);
          ctx.quadraticCurveTo(mx, my, x2, y2);
          ctx.strokeStyle = item.stroke ?? "#fff";
          ctx.lineWidth = item.width ?? 1;
          ctx.stroke();
          break;
        }
        case "rect": {
          if (item.fill) {
            ctx.fillStyle = item.fill;
            ctx.fillRect(item.x * width, item.y * height, (item.w ?? 0) * width, (item.h ?? 0) * height);
          }
          break;
        }
        case "text": {
          ctx.fillStyle = item.fill ?? "#fff";
          ctx.font = "11px system-ui";
          ctx.textAlign = "left";
          ctx.fillText(item.text ?? "", item.x * width, item.y * height);
          break;
        }
      }
    }
    ctx.globalAlpha = 1;
  }

  /** Front layer: local green mesh, dwell ring, marquee, activation icon. */
  paintLocal(
    packet: FramePacket | null,
    dwell: Partial<Record<Handedness, number>>,
    marqueeCircle: Circle | null,
    activationIcon: string | null,
  ): void {
    const ctx = this.local.getContext("2d")!;
    const { width, height } = this.local;
    ctx.clearRect(0, 0, width, height);
    if (marqueeCircle) {
      ctx.beginPath();
      ctx.arc(
        marqueeCircle.center[0] * width,
        marqueeCircle.center[1] * height,
        marqueeCircle.radius * width,
        0,
        Math.PI * 2,
      );
      ctx.strokeStyle = COLORS.marquee;
      ctx.globalAlpha = 0.6;
      ctx.lineWidth = 2;
      ctx.stroke();
      ctx.globalAlpha = 1;
    }
    if (packet) {
      for (const hand of packet.hands) {
        const skeleton = hand.points.map((p) => [p.x, p.y, p.z] as [number, number, number]);
        drawSkeleton(ctx, skeleton, width, height, COLORS.localMesh, 2);
        const progress = dwell[hand.handedness] ?? 0;
        if (progress > 0) {
          const wrist = hand.points[WRIST];
          ctx.beginPath();
          ctx.arc(
            wrist.x * width,
            wrist.y * height,
            14,
            -Math.PI / 2,
            -Math.PI / 2 + progress * Math.PI * 2,
          );
          ctx.strokeStyle = COLORS.dwellRing;
          ctx.lineWidth = 4;
          ctx.stroke();
        }
      }
    }
    if (activationIcon) {
      ctx.font = "22px system-ui";
      ctx.textAlign = "right";
      ctx.fillStyle = COLORS.localMesh;
      ctx.fillText(activationIcon, width - 16, 32);
    }
  }
}

/** Minimal per-kind activation icons shown when a gesture is recognized. */
export const ACTIVATION_ICONS: Record<string, string> = {
  PersistTap: "+ tap",
  Marquee: "o select",
  PinchBegin: "* grab",
  ConnectHold: "= connect",
  PanBegin: "< pan >",
  ZoomBegin: "<- zoom ->",
};
