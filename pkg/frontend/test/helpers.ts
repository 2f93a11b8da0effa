import { readFileSync } from "node:fs";
import { join } from "node:path";

export const FIXTURES = join(__dirname, "..", "..", "src", "pairviz", "fixtures");

export function fixtureText(...parts: string[]): string {
  return readFileSync(join(FIXTURES, ...parts), "utf-8");
}

export function fixtureJson(...parts: string[]): any {
  return JSON.parse(fixtureText(...parts));
}

export function fixtureLines(...parts: string[]): string[] {
  return fixtureText(...parts)
    .split("\n")
    .map((line) => line.trim())
    .filter(Boolean);
}
