/** Shared test utilities: seeded PRNG, random images, document snapshots. */

import { toBase64 } from "../src/ppm.js";
import type { CanvasDocument, GrayImage } from "../src/types.js";

/** Deterministic float PRNG in [0, 1). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomInt(rng: () => number, lo: number, hi: number): number {
  return lo + Math.floor(rng() * (hi - lo));
}

export function makeGray(w: number, h: number, rng: () => number): GrayImage {
  const data = new Uint8Array(w * h);
  for (let i = 0; i < data.length; i += 1) data[i] = randomInt(rng, 0, 256);
  return { w, h, data };
}

/** Canonical string form of a document; equal strings mean equal state. */
export function snapshot(doc: CanvasDocument): string {
  return JSON.stringify(doc, (_key, value) =>
    value instanceof Uint8Array ? toBase64(value) : value,
  );
}
