/**
 * Last-writer-wins replicated document, one register per key, ordered by
 * (Lamport clock, replica id). Matches the relay's merge semantics so any
 * op delivery order converges.
 */

export interface ReplicaOp {
  key: string;
  value: unknown;
  clock: number;
  replica: string;
}

interface Entry {
  value: unknown;
  clock: number;
  replica: string;
}

function wins(clock: number, replica: string, entry: Entry): boolean {
  if (clock !== entry.clock) return clock > entry.clock;
  return replica > entry.replica;
}

export class Document {
  readonly replicaId: string;
  private entries = new Map<string, Entry>();
  private clock = 0;

  constructor(replicaId: string) {
    if (!replicaId) throw new Error("replicaId must be non-empty");
    this.replicaId = replicaId;
  }

  localSet(key: string, value: unknown): ReplicaOp {
    this.clock += 1;
    this.entries.set(key, { value, clock: this.clock, replica: this.replicaId });
    return { key, value, clock: this.clock, replica: this.replicaId };
  }

  applyRemote(op: ReplicaOp): boolean {
    if (op.clock > this.clock) this.clock = op.clock;
    const entry = this.entries.get(op.key);
    if (entry !== undefined && !wins(op.clock, op.replica, entry)) return false;
    this.entries.set(op.key, { value: op.value, clock: op.clock, replica: op.replica });
    return true;
  }

  get<T = unknown>(key: string, fallback?: T): T | undefined {
    const entry = this.entries.get(key);
    return entry !== undefined ? (entry.value as T) : fallback;
  }

  has(key: string): boolean {
    return this.entries.has(key);
  }

  *itemsWithPrefix(prefix: string): Generator<[string, unknown]> {
    for (const [key, entry] of this.entries) {
      if (key.startsWith(prefix)) yield [key, entry.value];
    }
  }

  currentClock(): number {
    return this.clock;
  }

  snapshot(): ReplicaOp[] {
    const keys = [...this.entries.keys()].sort();
    return keys.map((key) => {
      const entry = this.entries.get(key)!;
      return { key, value: entry.value, clock: entry.clock, replica: entry.replica };
    });
  }

  mergeSnapshot(entries: ReplicaOp[]): number {
    let changed = 0;
    for (const op of entries) {
      if (this.applyRemote(op)) changed += 1;
    }
    return changed;
  }

  canonicalJson(): string {
    return JSON.stringify(
      this.snapshot().map((op) => ({
        clock: op.clock,
        key: op.key,
        replica: op.replica,
        value: op.value,
      })),
    );
  }
}

export const PRESENCE_TTL_MS = 500;

export interface PresenceEntry {
  seq: number;
  payload: Record<string, unknown>;
  tMs: number;
}

export class PresenceStore {
  private entries = new Map<string, PresenceEntry>();

  update(participant: string, seq: number, payload: Record<string, unknown>, nowMs: number): boolean {
    const entry = this.entries.get(participant);
    if (entry !== undefined && seq <= entry.seq) return false;
    this.entries.set(participant, { seq, payload, tMs: nowMs });
    return true;
  }

  read(nowMs: number): Map<string, Record<string, unknown>> {
    const fresh = new Map<string, Record<string, unknown>>();
    for (const [participant, entry] of this.entries) {
      if (nowMs - entry.tMs <= PRESENCE_TTL_MS) fresh.set(participant, entry.payload);
    }
    return fresh;
  }

  drop(participant: string): void {
    this.entries.delete(participant);
  }
}
