/**
 * Frame sources. `CameraTracker` wraps the in-browser MediaPipe Hands
 * model (loaded from CDN at runtime) and emits 21-point FramePackets;
 * `TraceReplaySource` plays a recorded trace file on the same interface,
 * which is also the fallback when camera permission is denied.
 *
 * A single-producer frame slot decouples capture callbacks from the
 * render loop: the newest frame wins, nothing queues.
 */

import { FramePacket, HandFrame, Handedness, LANDMARK_COUNT } from "./landmarks.js";

export interface FrameSource {
  start(onFrame: (packet: FramePacket) => void): Promise<void>;
  stop(): void;
  readonly kind: "camera" | "replay";
}

export class FrameSlot {
  private frame: FramePacket | null = null;

  put(packet: FramePacket): void {
    this.frame = packet; // newest wins
  }

  take(): FramePacket | null {
    const out = this.frame;
    this.frame = null;
    return out;
  }
}

const HANDS_CDN = "https://cdn.jsdelivr.net/npm/@mediapipe/hands";

interface MediaPipeLandmark {
  x: number;
  y: number;
  z: number;
}

interface MediaPipeResults {
  multiHandLandmarks?: MediaPipeLandmark[][];
  multiHandedness?: { label: string }[];
}

export class CameraTracker implements FrameSource {
  readonly kind = "camera";
  private video: HTMLVideoElement | null = null;
  private hands: any = null;
  private running = false;
  private epochMs = 0;

  constructor(private participant: string) {}

  async start(onFrame: (packet: FramePacket) => void): Promise<void> {
    const stream = await navigator.mediaDevices.getUserMedia({
      video: { width: 640, height: 480 },
    });
    const video = document.createElement("video");
    video.srcObject = stream;
    video.muted = true;
    await video.play();
    this.video = video;

    const HandsCtor = await loadHandsModule();
    this.hands = new HandsCtor({
      locateFile: (file: string) => `${HANDS_CDN}/${file}`,
    });
    this.hands.setOptions({
      maxNumHands: 2,
      modelComplexity: 1,
      minDetectionConfidence: 0.6,
      minTrackingConfidence: 0.6,
    });
    this.epochMs = performance.now();
    this.hands.onResults((results: MediaPipeResults) => {
      onFrame(this.toPacket(results));
    });

    this.running = true;
    const pump = async () => {
      if (!this.running || !this.video) return;
      await this.hands.send({ image: this.video });
      requestAnimationFrame(pump);
    };
    requestAnimationFrame(pump);
  }

  private toPacket(results: MediaPipeResults): FramePacket {
    const hands: HandFrame[] = [];
    const seen = new Set<string>();
    const landmarkSets = results.multiHandLandmarks ?? [];
    for (let i = 0; i < landmarkSets.length && i < 2; i++) {
      const label = results.multiHandedness?.[i]?.label;
      const handedness: Handedness = label === "Left" ? "Left" : "Right";
      if (seen.has(handedness) || landmarkSets[i].length !== LANDMARK_COUNT) continue;
      seen.add(handedness);
      hands.push({
        handedness,
        points: landmarkSets[i].map((p) => ({ x: p.x, y: p.y, z: p.z })),
      });
    }
    return {
      tMs: Math.round(performance.now() - this.epochMs),
      participant: this.participant,
      hands,
    };
  }

  stop(): void {
    this.running = false;
    this.hands?.close?.();
    const stream = this.video?.srcObject as MediaStream | null;
    stream?.getTracks().forEach((track) => track.stop());
    this.video = null;
  }
}

async function loadHandsModule(): Promise<any> {
  const w = window as any;
  if (w.Hands) return w.Hands;
  await new Promise<void>((resolve, reject) => {
    const script = document.createElement("script");
    script.src = `${HANDS_CDN}/hands.js`;
    script.onload = () => resolve();
    script.onerror = () => reject(new Error("failed to load hand-tracking model"));
    document.head.appendChild(script);
  });
  return (window as any).Hands;
}

/** Accumulates raw (camera-space) frames for harness replay. */
export class TraceRecorder {
  private lines: string[] = [];

  add(raw: FramePacket, serialize: (p: FramePacket) => string): void {
    this.lines.push(serialize(raw));
  }

  size(): number {
    return this.lines.length;
  }

  /** Trace-file text; one canonical JSON record per line. */
  text(): string {
    return this.lines.join("\n") + (this.lines.length ? "\n" : "");
  }

  download(filename: string): void {
    const blob = new Blob([this.text()], { type: "application/jsonl" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = filename;
    a.click();
    URL.revokeObjectURL(a.href);
  }

  clear(): void {
    this.lines = [];
  }
}

/** Plays a recorded trace at its own timestamps (camera-denied fallback). */
export class TraceReplaySource implements FrameSource {
  readonly kind = "replay";
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private packets: FramePacket[],
    private participant: string,
    private loop = true,
  ) {}

  async start(onFrame: (packet: FramePacket) => void): Promise<void> {
    const packets = this.packets.map((p) => ({ ...p, participant: this.participant }));
    if (!packets.length) return;
    let index = 0;
    let epochOffset = 0;
    const tick = () => {
      if (this.stopped) return;
      const base = packets[index];
      onFrame({ ...base, tMs: base.tMs + epochOffset });
      index += 1;
      if (index >= packets.length) {
        if (!this.loop) return;
        epochOffset += packets[packets.length - 1].tMs + 33;
        index = 0;
      }
      const delay =
        index === 0 ? 33 : Math.max(0, packets[index].tMs - packets[index - 1].tMs);
      this.timer = setTimeout(tick, delay);
    };
    tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
  }
}
