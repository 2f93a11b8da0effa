/**
 * Scene model: scenario elements plus the replicated document overrides,
 * viewport transforms, hit-testing, and the gesture-event-to-write mapping
 * used when the local participant interacts.
 */

import { Handedness } from "./landmarks.js";
import { Circle, GestureEvent } from "./recognizer.js";
import { Document, ReplicaOp } from "./replica.js";

export const VIEWPORT_KEY = "viewport/state";
export const SCALE_MIN = 0.25;
export const SCALE_MAX = 8.0;
export const SCROLL_ROW_UNITS = 0.02;
export const DEFAULT_AIRPORT_RADIUS = 0.02;

export type ElementKind = "Node" | "Airport" | "ListWidget" | "SwitcherWidget";

export interface Element {
  id: string;
  kind: ElementKind;
  x: number;
  y: number;
  radius: number;
  payload: Record<string, any>;
}

export interface Viewport {
  panX: number;
  panY: number;
  scale: number;
}

export interface Scenario {
  name: string;
  elements: Map<string, Element>;
  edges: [string, string][];
}

export type Point2 = [number, number];

export function project(lat: number, lon: number): Point2 {
  if (lat < -90 || lat > 90) throw new Error(`lat out of range: ${lat}`);
  if (lon < -180 || lon > 180) throw new Error(`lon out of range: ${lon}`);
  return [(lon + 180.0) / 360.0, (90.0 - lat) / 180.0];
}

export function toScreen(vp: Viewport, point: Point2): Point2 {
  return [(point[0] - vp.panX) * vp.scale, (point[1] - vp.panY) * vp.scale];
}

export function toScene(vp: Viewport, point: Point2): Point2 {
  return [point[0] / vp.scale + vp.panX, point[1] / vp.scale + vp.panY];
}

export function hitTestPoint(elements: Iterable<Element>, cursor: Point2): string | null {
  let bestDist = Infinity;
  let bestId: string | null = null;
  for (const el of elements) {
    const dx = cursor[0] - el.x;
    const dy = cursor[1] - el.y;
    const d = Math.sqrt(dx * dx + dy * dy);
    if (d > el.radius) continue;
    if (d < bestDist || (d === bestDist && bestId !== null && el.id < bestId)) {
      bestDist = d;
      bestId = el.id;
    }
  }
  return bestId;
}

export function hitTestCircle(elements: Iterable<Element>, circle: Circle): Set<string> {
  const hits = new Set<string>();
  for (const el of elements) {
    const dx = el.x - circle.center[0];
    const dy = el.y - circle.center[1];
    if (Math.sqrt(dx * dx + dy * dy) <= circle.radius) hits.add(el.id);
  }
  return hits;
}

export function scenarioFromObj(obj: any): Scenario {
  const elements = new Map<string, Element>();
  const add = (el: Element) => {
    if (elements.has(el.id)) throw new Error(`duplicate element id ${el.id}`);
    elements.set(el.id, el);
  };
  for (const entry of obj.airports ?? []) {
    const [x, y] = project(entry.lat, entry.lon);
    add({
      id: entry.code,
      kind: "Airport",
      x,
      y,
      radius: entry.radius ?? DEFAULT_AIRPORT_RADIUS,
      payload: { code: entry.code, lat: entry.lat, lon: entry.lon },
    });
  }
  for (const entry of obj.elements ?? []) {
    add({
      id: entry.id,
      kind: entry.kind,
      x: entry.x,
      y: entry.y,
      radius: entry.radius,
      payload: entry.payload ?? {},
    });
  }
  return { name: obj.name ?? "scene", elements, edges: obj.edges ?? [] };
}

export interface SelectionValue {
  mode: "fine" | "coarse";
  ids: string[];
}

export class SceneDoc {
  constructor(
    readonly scenario: Scenario,
    readonly doc: Document,
  ) {}

  viewport(): Viewport {
    const raw = this.doc.get<any>(VIEWPORT_KEY);
    if (!raw) return { panX: 0.0, panY: 0.0, scale: 1.0 };
    return { panX: raw.pan[0], panY: raw.pan[1], scale: raw.scale };
  }

  position(id: string): Point2 {
    const override = this.doc.get<number[]>(`pos/${id}`);
    if (override) return [override[0], override[1]];
    const el = this.scenario.elements.get(id)!;
    return [el.x, el.y];
  }

  currentElements(): Element[] {
    const out: Element[] = [];
    for (const el of this.scenario.elements.values()) {
      const [x, y] = this.position(el.id);
      out.push(x === el.x && y === el.y ? el : { ...el, x, y });
    }
    return out;
  }

  edges(): [string, string][] {
    const out = [...this.scenario.edges];
    for (const [key, value] of this.doc.itemsWithPrefix("edge/")) {
      if (!value) continue;
      const pair = key.slice("edge/".length).split("|");
      if (pair.length === 2) out.push([pair[0], pair[1]]);
    }
    return out;
  }

  selections(): Map<string, SelectionValue> {
    const out = new Map<string, SelectionValue>();
    for (const [key, value] of this.doc.itemsWithPrefix("sel/")) {
      if (value) out.set(key, value as SelectionValue);
    }
    return out;
  }

  selectedAirports(hand: Handedness): Set<string> {
    const codes = new Set<string>();
    for (const [key, sel] of this.selections()) {
      if (!key.endsWith(`/${hand}`)) continue;
      for (const id of sel.ids) {
        if (this.scenario.elements.get(id)?.kind === "Airport") codes.add(id);
      }
    }
    return codes;
  }

  origins(): Set<string> {
    return this.selectedAirports("Left");
  }

  dests(): Set<string> {
    return this.selectedAirports("Right");
  }

  widgetOption(id: string): string | undefined {
    const el = this.scenario.elements.get(id);
    return this.doc.get<string>(`widget/${id}/option`, el?.payload.option);
  }

  scrollOffset(id: string): number {
    return this.doc.get<number>(`widget/${id}/scroll`, 0) ?? 0;
  }

  hitPoint(cursor: Point2): string | null {
    return hitTestPoint(this.currentElements(), cursor);
  }
}

/** Minimum-hop path via BFS, neighbors in ascending id order. */
export function shortestPath(
  edges: [string, string][],
  nodes: Set<string>,
  a: string,
  b: string,
): string[] | null {
  if (!nodes.has(a) || !nodes.has(b)) throw new Error(`unknown node ${!nodes.has(a) ? a : b}`);
  if (a === b) return [a];
  const adjacency = new Map<string, string[]>();
  for (const [u, v] of edges) {
    if (!adjacency.has(u)) adjacency.set(u, []);
    if (!adjacency.has(v)) adjacency.set(v, []);
    adjacency.get(u)!.push(v);
    adjacency.get(v)!.push(u);
  }
  for (const list of adjacency.values()) list.sort();
  const parent = new Map<string, string>([[a, a]]);
  const queue = [a];
  while (queue.length) {
    const cur = queue.shift()!;
    for (const nxt of adjacency.get(cur) ?? []) {
      if (parent.has(nxt)) continue;
      parent.set(nxt, cur);
      if (nxt === b) {
        const path = [b];
        while (path[path.length - 1] !== a) path.push(parent.get(path[path.length - 1])!);
        path.reverse();
        return path;
      }
      queue.push(nxt);
    }
  }
  return null;
}

export interface Flight {
  origin: string;
  dest: string;
  airline: string;
  cost: number;
  duration_min: number;
  depart_day: number;
}

/** Flights from any selected origin to any selected destination, cheapest first. */
export function queryFlights(
  flights: Flight[],
  origins: Set<string>,
  dests: Set<string>,
): Flight[] {
  return flights
    .filter((f) => origins.has(f.origin) && dests.has(f.dest))
    .sort(
      (a, b) =>
        a.cost - b.cost ||
        a.depart_day - b.depart_day ||
        (a.origin < b.origin ? -1 : a.origin > b.origin ? 1 : 0) ||
        (a.dest < b.dest ? -1 : a.dest > b.dest ? 1 : 0),
    );
}

/** Equal-width counts over [min, max]; the max lands in the last bin. */
export function histogram(values: number[], binCount: number): number[] {
  if (binCount < 1) throw new Error(`binCount must be >= 1, got ${binCount}`);
  const counts = new Array(binCount).fill(0);
  if (!values.length) return counts;
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo;
  for (const v of values) {
    const idx = span === 0 ? binCount - 1 : Math.min(Math.floor(((v - lo) / span) * binCount), binCount - 1);
    counts[idx] += 1;
  }
  return counts;
}

function clampScale(scale: number): number {
  return Math.min(Math.max(scale, SCALE_MIN), SCALE_MAX);
}

const SELECTABLE: ReadonlySet<ElementKind> = new Set(["Node", "Airport"]);

/** Translate a local gesture event into document writes (ops to send). */
export function applyEvent(scene: SceneDoc, event: GestureEvent): ReplicaOp[] {
  const doc = scene.doc;
  const vp = scene.viewport();
  const p = event.participant;
  const hand = event.hand;
  const payload = event.payload as any;

  switch (event.kind) {
    case "PersistTap": {
      const cursor = toScene(vp, payload.cursor);
      const hit = scene.hitPoint(cursor);
      if (hit === null) return [];
      const el = scene.scenario.elements.get(hit)!;
      if (SELECTABLE.has(el.kind)) {
        return [doc.localSet(`sel/${p}/${hand}`, { mode: "fine", ids: [hit] })];
      }
      if (el.kind === "SwitcherWidget") {
        const options: string[] = el.payload.options ?? [];
        if (!options.length) return [];
        const current = scene.widgetOption(hit);
        const idx = current !== undefined ? options.indexOf(current) : -1;
        return [doc.localSet(`widget/${hit}/option`, options[(idx + 1) % options.length])];
      }
      return [];
    }
    case "Marquee": {
      if (!payload.persistent) return [];
      const center = toScene(vp, payload.center);
      const circle: Circle = { center, radius: payload.radius / vp.scale };
      const ids = [...hitTestCircle(scene.currentElements(), circle)]
        .filter((id) => SELECTABLE.has(scene.scenario.elements.get(id)!.kind))
        .sort();
      return [doc.localSet(`sel/${p}/${hand}`, { mode: "coarse", ids })];
    }
    case "PinchBegin": {
      const cursor = toScene(vp, payload.cursor);
      const hit = scene.hitPoint(cursor);
      if (hit === null) return [];
      const el = scene.scenario.elements.get(hit)!;
      if (el.kind === "Node") {
        const pos = scene.position(hit);
        return [
          doc.localSet(`grab/${p}/${hand}`, {
            id: hit,
            dx: cursor[0] - pos[0],
            dy: cursor[1] - pos[1],
          }),
        ];
      }
      if (el.kind === "ListWidget") {
        return [
          doc.localSet(`grab/${p}/${hand}`, {
            id: hit,
            y0: cursor[1],
            scroll0: scene.scrollOffset(hit),
          }),
        ];
      }
      return [];
    }
    case "PinchMove": {
      const grab = doc.get<any>(`grab/${p}/${hand}`);
      if (!grab) return [];
      const target = scene.scenario.elements.get(grab.id);
      if (!target) return [];
      const cursor = toScene(vp, payload.cursor);
      if (target.kind === "Node") {
        return [doc.localSet(`pos/${grab.id}`, [cursor[0] - grab.dx, cursor[1] - grab.dy])];
      }
      if (target.kind === "ListWidget") {
        const rows = Math.floor((grab.y0 - cursor[1]) / SCROLL_ROW_UNITS + 0.5);
        return [doc.localSet(`widget/${grab.id}/scroll`, Math.max(0, grab.scroll0 + rows))];
      }
      return [];
    }
    case "PinchEnd": {
      if (doc.get(`grab/${p}/${hand}`)) {
        return [doc.localSet(`grab/${p}/${hand}`, null)];
      }
      return [];
    }
    case "ConnectHold": {
      const a = scene.hitPoint(toScene(vp, payload.cursor_a));
      const b = scene.hitPoint(toScene(vp, payload.cursor_b));
      if (a === null || b === null || a === b) return [];
      if (
        scene.scenario.elements.get(a)?.kind !== "Node" ||
        scene.scenario.elements.get(b)?.kind !== "Node"
      ) {
        return [];
      }
      const [lo, hi] = a < b ? [a, b] : [b, a];
      return [doc.localSet(`edge/${lo}|${hi}`, true)];
    }
    case "PanMove": {
      const [dx, dy] = payload.delta;
      return [
        doc.localSet(VIEWPORT_KEY, { pan: [vp.panX - dx, vp.panY - dy], scale: vp.scale }),
      ];
    }
    case "ZoomBegin":
      return [doc.localSet(`zoom/${p}/baseline`, vp.scale)];
    case "ZoomMove": {
      const base = doc.get<number>(`zoom/${p}/baseline`, vp.scale) ?? vp.scale;
      const newScale = clampScale(base * payload.factor);
      const [ax, ay] = payload.anchor;
      const pan = [
        vp.panX + ax * (1.0 / vp.scale - 1.0 / newScale),
        vp.panY + ay * (1.0 / vp.scale - 1.0 / newScale),
      ];
      return [doc.localSet(VIEWPORT_KEY, { pan, scale: newScale })];
    }
    default:
      return []; // ephemeral kinds live in presence only
  }
}
