/**
 * Client bootstrap: joins a session, runs capture -> mirror -> recognizer
 * -> event application at ~30 fps, streams ops and presence, and paints
 * the three-layer composite from the replicated document plus the peer's
 * presence. Query parameters:
 *
 *   ?server=ws://host:8765&session=demo&participant=A
 *   &scenario=<url of scenario json>
 *   &replay=<url of a trace file>   (skips the camera; also the fallback
 *                                    when camera permission is denied)
 */

import { SessionClient } from "./client.js";
import {
  FramePacket,
  Handedness,
  INDEX_TIP,
  mirror,
  parseTrace,
  serializeTraceRecord,
} from "./landmarks.js";
import { PresenceMessage } from "./protocol.js";
import { Circle, fingertipCircle, GestureEvent, Recognizer } from "./recognizer.js";
import { Document } from "./replica.js";
import {
  applyEvent,
  Flight,
  histogram,
  Point2,
  queryFlights,
  SceneDoc,
  scenarioFromObj,
  shortestPath,
  toScene,
} from "./scene.js";
import {
  ACTIVATION_ICONS,
  buildSceneDrawList,
  LayerStack,
  PresenceSnapshot,
  SceneViewState,
} from "./render.js";
import {
  CameraTracker,
  FrameSlot,
  FrameSource,
  TraceRecorder,
  TraceReplaySource,
} from "./tracker.js";

interface AppConfig {
  server: string;
  session: string;
  participant: string;
  scenarioUrl: string;
  replayUrl: string | null;
}

function configFromQuery(): AppConfig {
  const params = new URLSearchParams(location.search);
  return {
    server: params.get("server") ?? "ws://127.0.0.1:8765",
    session: params.get("session") ?? "demo",
    participant: params.get("participant") ?? "A",
    scenarioUrl: params.get("scenario") ?? "./scenario.json",
    replayUrl: params.get("replay"),
  };
}

function canvas(id: string): HTMLCanvasElement {
  const el = document.getElementById(id) as HTMLCanvasElement | null;
  if (!el) throw new Error(`missing canvas #${id}`);
  el.width = el.clientWidth;
  el.height = el.clientHeight;
  return el;
}

export async function runClient(config: AppConfig = configFromQuery()): Promise<void> {
  const statusEl = document.getElementById("status")!;
  const layers = new LayerStack(canvas("remote"), canvas("scene"), canvas("local"));

  const scenarioResp = await fetch(config.scenarioUrl);
  const scenario = scenarioFromObj(await scenarioResp.json());
  const doc = new Document(config.participant);
  const scene = new SceneDoc(scenario, doc);
  const recognizer = new Recognizer(config.participant);
  const dataset = await loadDataset(); // optional; enables the flight list

  let remotePresence: PresenceSnapshot | null = null;
  let remotePresenceAt = 0;
  let dirty = true;

  const client = new SessionClient({
    url: config.server,
    session: config.session,
    participant: config.participant,
    doc,
    onChange: () => {
      dirty = true;
    },
    onPresence: (message: PresenceMessage) => {
      remotePresence = message.payload as unknown as PresenceSnapshot;
      remotePresenceAt = performance.now();
      dirty = true;
    },
    onState: (state) => {
      statusEl.textContent = `${config.participant} @ ${config.session}: ${state}`;
    },
    onError: (code, detail) => {
      statusEl.textContent = `relay error: ${code} ${detail ?? ""}`;
    },
  });
  client.connect();

  const slot = new FrameSlot();
  const source = await pickSource(config, slot);

  // Press "r" to start/stop recording the raw stream as a trace file.
  const recorder = new TraceRecorder();
  let recording = false;
  window.addEventListener("keydown", (keyEvent) => {
    if (keyEvent.key !== "r") return;
    if (recording && recorder.size() > 0) {
      recorder.download(`${config.participant}_session.jsonl`);
      recorder.clear();
    }
    recording = !recording;
    statusEl.textContent = recording ? "recording trace…" : "recording saved";
  });

  let lastPacket: FramePacket | null = null;
  let activationIcon: string | null = null;
  let activationUntil = 0;

  const frame = () => {
    const raw = slot.take();
    if (raw) {
      if (recording) recorder.add(raw, serializeTraceRecord);
      const packet = mirror(raw);
      lastPacket = packet;
      let events: GestureEvent[] = [];
      try {
        events = recognizer.step(packet);
      } catch {
        events = []; // an out-of-order replay frame must not kill the loop
      }
      for (const event of events) {
        const icon = ACTIVATION_ICONS[event.kind];
        if (icon) {
          activationIcon = icon;
          activationUntil = performance.now() + 900;
        }
        client.sendOps(applyEvent(scene, event));
      }
      client.sendPresence(packet.tMs, presencePayload(recognizer, packet));
      dirty = true;
    }

    if (performance.now() > activationUntil) activationIcon = null;
    if (performance.now() - remotePresenceAt > 500) remotePresence = null; // expiry

    if (dirty || lastPacket) {
      layers.paintRemote(remotePresence);
      layers.paintScene(
        buildSceneDrawList(scene, sceneView(scene, dataset, recognizer, lastPacket, remotePresence)),
      );
      const dwell: Partial<Record<Handedness, number>> = {
        Left: recognizer.dwellProgress("Left"),
        Right: recognizer.dwellProgress("Right"),
      };
      let marqueeCircle: Circle | null = null;
      if (lastPacket) {
        for (const hand of lastPacket.hands) {
          if (recognizer.shape(hand.handedness) === "Spread") {
            marqueeCircle = fingertipCircle(hand);
          }
        }
      }
      layers.paintLocal(lastPacket, dwell, marqueeCircle, activationIcon);
      dirty = false;
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);

  window.addEventListener("beforeunload", () => {
    source.stop();
    client.close();
  });
}

async function loadDataset(): Promise<Flight[] | null> {
  try {
    const resp = await fetch("./dataset.json");
    if (!resp.ok) return null;
    const obj = await resp.json();
    return obj.flights as Flight[];
  } catch {
    return null;
  }
}

/**
 * Derived view state: the candidate flight list plus cost / travel time /
 * departure-date histograms when both an origin set and a destination set
 * exist, and the two-hand shortest-path reveal when two pointing cursors
 * (either participant's) rest on distinct graph nodes.
 */
function sceneView(
  scene: SceneDoc,
  dataset: Flight[] | null,
  recognizer: Recognizer,
  lastPacket: FramePacket | null,
  remotePresence: PresenceSnapshot | null,
): SceneViewState {
  const view: SceneViewState = {};
  if (dataset) {
    const origins = scene.origins();
    const dests = scene.dests();
    if (origins.size && dests.size) {
      const flights = queryFlights(dataset, origins, dests);
      view.flights = flights;
      if (flights.length) {
        view.histograms = [
          { label: "cost", counts: histogram(flights.map((f) => f.cost), 10) },
          { label: "travel time", counts: histogram(flights.map((f) => f.duration_min), 10) },
          { label: "departure day", counts: histogram(flights.map((f) => f.depart_day), 10) },
        ];
      }
    }
  }

  // Pointing cursors from both sides of the glass.
  const vp = scene.viewport();
  const cursors: Point2[] = [];
  if (lastPacket) {
    for (const hand of lastPacket.hands) {
      if (recognizer.shape(hand.handedness) !== "Point") continue;
      const tip = hand.points[INDEX_TIP];
      cursors.push(toScene(vp, [tip.x, tip.y]));
    }
  }
  if (remotePresence) {
    for (const hand of Object.values(remotePresence.hands)) {
      if (hand.shape === "Point" && hand.cursor) {
        cursors.push(toScene(vp, [hand.cursor[0], hand.cursor[1]]));
      }
    }
  }
  const nodeIds = new Set(
    [...scene.scenario.elements.values()].filter((el) => el.kind === "Node").map((el) => el.id),
  );
  const hitNodes: string[] = [];
  for (const cursor of cursors) {
    const hit = scene.hitPoint(cursor);
    if (hit !== null && nodeIds.has(hit) && !hitNodes.includes(hit)) hitNodes.push(hit);
  }
  if (hitNodes.length >= 2) {
    const path = shortestPath(scene.edges(), nodeIds, hitNodes[0], hitNodes[1]);
    if (path) view.highlightPath = path;
  }
  return view;
}

function presencePayload(recognizer: Recognizer, packet: FramePacket) {
  const hands: Record<string, unknown> = {};
  for (const hand of packet.hands) {
    hands[hand.handedness] = {
      shape: recognizer.shape(hand.handedness),
      cursor: [hand.points[8].x, hand.points[8].y],
      dwell: recognizer.dwellProgress(hand.handedness),
      skeleton: hand.points.map((p) => [p.x, p.y, p.z]),
    };
  }
  return { hands };
}

async function pickSource(config: AppConfig, slot: FrameSlot): Promise<FrameSource> {
  if (config.replayUrl) {
    const resp = await fetch(config.replayUrl);
    const packets = parseTrace(await resp.text());
    const source = new TraceReplaySource(packets, config.participant);
    await source.start((p) => slot.put(p));
    return source;
  }
  try {
    const source = new CameraTracker(config.participant);
    await source.start((p) => slot.put(p));
    return source;
  } catch (err) {
    // Camera denied or unavailable: fall back to the bundled demo trace.
    const resp = await fetch("./demo_trace.jsonl");
    const packets = parseTrace(await resp.text());
    const source = new TraceReplaySource(packets, config.participant);
    await source.start((p) => slot.put(p));
    return source;
  }
}
