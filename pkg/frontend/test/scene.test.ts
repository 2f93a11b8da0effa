import { describe, expect, it } from "vitest";

import { Handedness } from "../src/landmarks.js";
import { GestureEvent, GestureKindName } from "../src/recognizer.js";
import { Document } from "../src/replica.js";
import {
  applyEvent,
  histogram,
  hitTestCircle,
  hitTestPoint,
  project,
  queryFlights,
  SceneDoc,
  scenarioFromObj,
  shortestPath,
  toScene,
  toScreen,
} from "../src/scene.js";
import { fixtureJson } from "./helpers.js";

function ev(
  kind: GestureKindName,
  payload: Record<string, unknown>,
  hand: Handedness = "Right",
  participant = "A",
): GestureEvent {
  return { t_ms: 1000, participant, hand, kind, payload };
}

function flightsScene(): SceneDoc {
  return new SceneDoc(scenarioFromObj(fixtureJson("flights.json")), new Document("A"));
}

function tutorScene(): SceneDoc {
  return new SceneDoc(scenarioFromObj(fixtureJson("tutor_graph.json")), new Document("A"));
}

describe("viewport transforms", () => {
  it("round-trips", () => {
    const vp = { panX: 0.3, panY: -0.1, scale: 2.5 };
    const [x, y] = toScene(vp, toScreen(vp, [0.42, 0.77]));
    expect(Math.abs(x - 0.42)).toBeLessThanOrEqual(1e-9);
    expect(Math.abs(y - 0.77)).toBeLessThanOrEqual(1e-9);
  });
});

describe("hit testing", () => {
  it("matches radius and tie rules", () => {
    const elements = [
      { id: "b", kind: "Node" as const, x: 0.4, y: 0.5, radius: 0.2, payload: {} },
      { id: "a", kind: "Node" as const, x: 0.6, y: 0.5, radius: 0.2, payload: {} },
    ];
    expect(hitTestPoint(elements, [0.5, 0.5])).toBe("a");
    expect(hitTestPoint(elements, [0.95, 0.5])).toBeNull();
    expect(hitTestCircle(elements, { center: [0.5, 0.5], radius: 0.11 })).toEqual(
      new Set(["a", "b"]),
    );
  });
});

describe("projection", () => {
  it("maps corners like the relay core", () => {
    expect(project(0, 0)).toEqual([0.5, 0.5]);
    expect(project(90, -180)).toEqual([0, 0]);
    expect(project(-90, 180)).toEqual([1, 1]);
    expect(() => project(91, 0)).toThrow();
  });
});

describe("derived views", () => {
  it("finds minimum-hop paths with ascending-id tie breaks", () => {
    const nodes = new Set(["a", "b", "c", "d"]);
    const edges: [string, string][] = [
      ["a", "b"],
      ["b", "d"],
      ["a", "c"],
      ["c", "d"],
    ];
    expect(shortestPath(edges, nodes, "a", "d")).toEqual(["a", "b", "d"]);
    expect(shortestPath(edges, nodes, "a", "a")).toEqual(["a"]);
    expect(shortestPath([["a", "b"]], new Set(["a", "b", "z"]), "a", "z")).toBeNull();
  });

  it("sorts flight queries by cost, day, origin, dest", () => {
    const flights = [
      { origin: "MAD", dest: "ARN", airline: "AA", cost: 300, duration_min: 1, depart_day: 2 },
      { origin: "MAD", dest: "ARN", airline: "BX", cost: 100, duration_min: 1, depart_day: 9 },
      { origin: "LIS", dest: "ARN", airline: "CJ", cost: 100, duration_min: 1, depart_day: 3 },
      { origin: "MAD", dest: "OSL", airline: "DM", cost: 100, duration_min: 1, depart_day: 3 },
    ];
    const got = queryFlights(flights, new Set(["MAD", "LIS"]), new Set(["ARN", "OSL"]));
    expect(got.map((f) => [f.cost, f.depart_day, f.origin, f.dest])).toEqual([
      [100, 3, "LIS", "ARN"],
      [100, 3, "MAD", "OSL"],
      [100, 9, "MAD", "ARN"],
      [300, 2, "MAD", "ARN"],
    ]);
  });

  it("bins like the relay core, degenerate range in the last bin", () => {
    expect(histogram([1, 2, 3, 4], 2)).toEqual([2, 2]);
    expect(histogram([5], 3)).toEqual([0, 0, 1]);
    expect(histogram([], 4)).toEqual([0, 0, 0, 0]);
  });
});

describe("applyEvent", () => {
  it("left tap on an airport populates origins", () => {
    const scene = flightsScene();
    const mad = scene.scenario.elements.get("MAD")!;
    const ops = applyEvent(scene, ev("PersistTap", { cursor: [mad.x, mad.y] }, "Left"));
    expect(ops).toHaveLength(1);
    expect(ops[0].key).toBe("sel/A/Left");
    expect([...scene.origins()]).toEqual(["MAD"]);
  });

  it("pan move shifts the viewport against the delta", () => {
    const scene = flightsScene();
    applyEvent(scene, ev("PanMove", { delta: [0.1, 0] }));
    expect(scene.viewport().panX).toBeCloseTo(-0.1, 12);
  });

  it("zoom scales from the baseline and keeps the anchor fixed", () => {
    const scene = flightsScene();
    const anchor: [number, number] = [0.6, 0.4];
    const scenePt = toScene(scene.viewport(), anchor);
    applyEvent(scene, ev("ZoomBegin", {}));
    applyEvent(scene, ev("ZoomMove", { factor: 3.0, anchor }));
    expect(scene.viewport().scale).toBe(3.0);
    const [sx, sy] = toScreen(scene.viewport(), scenePt);
    expect(Math.abs(sx - anchor[0])).toBeLessThanOrEqual(1e-9);
    expect(Math.abs(sy - anchor[1])).toBeLessThanOrEqual(1e-9);
    applyEvent(scene, ev("ZoomMove", { factor: 100, anchor }));
    expect(scene.viewport().scale).toBe(8.0); // clamped
  });

  it("pinch drags a node by its grab offset", () => {
    const scene = tutorScene();
    const [x, y] = scene.position("n03");
    applyEvent(scene, ev("PinchBegin", { cursor: [x + 0.01, y] }));
    applyEvent(scene, ev("PinchMove", { cursor: [x + 0.21, y - 0.1] }));
    const [nx, ny] = scene.position("n03");
    expect(nx).toBeCloseTo(x + 0.2, 12);
    expect(ny).toBeCloseTo(y - 0.1, 12);
  });

  it("pinch over the list scrolls one row per quantum, never negative", () => {
    const scene = flightsScene();
    const widget = scene.scenario.elements.get("flight_list")!;
    applyEvent(scene, ev("PinchBegin", { cursor: [widget.x, widget.y] }));
    applyEvent(scene, ev("PinchMove", { cursor: [widget.x, widget.y - 0.061] }));
    expect(scene.scrollOffset("flight_list")).toBe(3);
    applyEvent(scene, ev("PinchMove", { cursor: [widget.x, widget.y + 0.3] }));
    expect(scene.scrollOffset("flight_list")).toBe(0);
  });

  it("connect hold writes an edge between two nodes", () => {
    const scene = tutorScene();
    const a = scene.position("n01");
    const b = scene.position("n09");
    applyEvent(scene, ev("ConnectHold", { cursor_a: a, cursor_b: b }, "Left"));
    expect(scene.edges()).toContainEqual(["n01", "n09"]);
  });

  it("ephemeral events write nothing", () => {
    const scene = flightsScene();
    expect(applyEvent(scene, ev("EphemeralPoint", { cursor: [0.5, 0.5] }))).toHaveLength(0);
    expect(
      applyEvent(scene, ev("Marquee", { center: [0.5, 0.5], radius: 0.1, persistent: false })),
    ).toHaveLength(0);
    expect(applyEvent(scene, ev("HandIdle", {}))).toHaveLength(0);
  });

  it("persistent marquee coarse-selects airports in the circle", () => {
    const scene = flightsScene();
    const ops = applyEvent(
      scene,
      ev("Marquee", { center: [0.712, 0.39], radius: 0.064, persistent: true }, "Right", "B"),
    );
    expect(ops).toHaveLength(1);
    const dests = scene.dests();
    expect(dests.has("DEL")).toBe(true);
    expect(dests.has("BOM")).toBe(true);
    expect(dests.size).toBeGreaterThanOrEqual(3);
  });
});
