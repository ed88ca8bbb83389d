import { describe, expect, it } from "vitest";

import {
  addFragment,
  addMaskStroke,
  addStroke,
  emptyDocument,
  snap,
} from "../src/document.js";
import { flatten, payloadHash } from "../src/flatten.js";
import { PALETTE } from "../src/palette.js";
import { decodePpm, encodePpm, fromBase64, grayToRgb, toBase64 } from "../src/ppm.js";
import type { CanvasDocument } from "../src/types.js";
import { makeGray, mulberry32, randomInt } from "./helpers.js";

function busyDocument(seed: number): CanvasDocument {
  const rng = mulberry32(seed);
  let doc = emptyDocument(32, 24);
  doc = addFragment(doc, makeGray(16, 16, rng), randomInt(rng, 0, 24), randomInt(rng, 0, 16));
  doc = addStroke(doc, {
    points: [
      { x: randomInt(rng, 0, 32), y: randomInt(rng, 0, 24) },
      { x: randomInt(rng, 0, 32), y: randomInt(rng, 0, 24) },
    ],
    radius: 1 + randomInt(rng, 0, 2),
    erase: false,
  });
  doc = addMaskStroke(doc, {
    points: [{ x: randomInt(rng, 0, 32), y: randomInt(rng, 0, 24) }],
    radius: 3,
    color: randomInt(rng, 0, PALETTE.length),
  });
  return doc;
}

describe("flatten determinism", () => {
  it("same document flattens to byte-identical payloads", () => {
    const doc = busyDocument(7);
    const a = flatten(doc);
    const b = flatten(doc);
    expect(a.sketch).toBe(b.sketch);
    expect(a.mask).toBe(b.mask);
  });

  it("independently rebuilt documents flatten identically", () => {
    // Same seed, fresh objects throughout: the payload depends only on
    // document content, never on identity or construction order.
    const a = flatten(busyDocument(21));
    const b = flatten(busyDocument(21));
    expect(a.sketch).toBe(b.sketch);
    expect(a.mask).toBe(b.mask);
    expect(payloadHash(a)).toBe(payloadHash(b));
  });

  it("flattening does not mutate the document", () => {
    const doc = busyDocument(3);
    const before = flatten(doc);
    flatten(doc);
    const after = flatten(doc);
    expect(after.sketch).toBe(before.sketch);
    expect(after.mask).toBe(before.mask);
  });

  it("sketch payload is a canonical P6 ppm", () => {
    const doc = emptyDocument(8, 8);
    const bytes = fromBase64(flatten(doc).sketch);
    const header = "P6\n8 8\n255\n";
    expect(Array.from(bytes.slice(0, header.length))).toEqual(
      Array.from(header, (c) => c.charCodeAt(0)),
    );
    expect(bytes.length).toBe(header.length + 3 * 64);
    // empty document: all white
    expect(bytes.slice(header.length).every((b) => b === 255)).toBe(true);
  });
});

describe("payload contents", () => {
  it("template fragment with empty mask layer sends an all-zero mask", () => {
    const rng = mulberry32(5);
    let doc = emptyDocument(16, 16);
    doc = addFragment(doc, makeGray(16, 16, rng), 0, 0);
    const mask = decodePpm(fromBase64(flatten(doc).mask));
    expect(mask.w).toBe(16);
    expect(mask.h).toBe(16);
    expect(mask.data.every((b) => b === 0)).toBe(true);
  });

  it("erasing changes the payload hash", () => {
    let doc = emptyDocument(16, 16);
    doc = addStroke(doc, {
      points: [
        { x: 4, y: 8 },
        { x: 12, y: 8 },
      ],
      radius: 1,
      erase: false,
    });
    const inked = payloadHash(flatten(doc));
    doc = addStroke(doc, {
      points: [{ x: 8, y: 8 }],
      radius: 2,
      erase: true,
    });
    const erased = payloadHash(flatten(doc));
    expect(erased).not.toBe(inked);
  });

  it("strokes darken exactly the stamped pixels", () => {
    let doc = emptyDocument(8, 8);
    doc = addStroke(doc, { points: [{ x: 3, y: 3 }], radius: 0, erase: false });
    const sketch = decodePpm(fromBase64(flatten(doc).sketch));
    for (let i = 0; i < 64; i += 1) {
      const expected = i === 3 * 8 + 3 ? 0 : 255;
      expect(sketch.data[3 * i]).toBe(expected);
      expect(sketch.data[3 * i + 1]).toBe(expected);
      expect(sketch.data[3 * i + 2]).toBe(expected);
    }
  });

  it("mask strokes paint palette colors", () => {
    let doc = emptyDocument(8, 8);
    doc = addMaskStroke(doc, { points: [{ x: 2, y: 2 }], radius: 0, color: 3 });
    const mask = decodePpm(fromBase64(flatten(doc).mask));
    const i = 2 * 8 + 2;
    expect([mask.data[3 * i], mask.data[3 * i + 1], mask.data[3 * i + 2]]).toEqual([
      ...PALETTE[3].rgb,
    ]);
  });

  it("palette holds 8 distinct colors", () => {
    expect(PALETTE.length).toBe(8);
    const seen = new Set(PALETTE.map((p) => p.rgb.join(",")));
    expect(seen.size).toBe(8);
  });

  it("fragment placement snaps to the 8px grid", () => {
    const rng = mulberry32(11);
    let doc = emptyDocument(32, 32);
    doc = addFragment(doc, makeGray(8, 8, rng), 5, 9);
    expect(doc.fragments[0].rect.x).toBe(8);
    expect(doc.fragments[0].rect.y).toBe(8);
    expect(snap(3)).toBe(0);
    expect(snap(4)).toBe(8);
  });
});

describe("ppm codec", () => {
  it("round-trips rgb images bit-exactly", () => {
    const rng = mulberry32(2);
    const image = grayToRgb(makeGray(5, 3, rng));
    const decoded = decodePpm(encodePpm(image));
    expect(decoded.w).toBe(5);
    expect(decoded.h).toBe(3);
    expect(Array.from(decoded.data)).toEqual(Array.from(image.data));
  });

  it("tolerates comments and odd whitespace in headers", () => {
    const raster = new Uint8Array(3 * 2 * 2).fill(9);
    const header = "P6\n# comment line\n 2\t2 # note\n255\n";
    const bytes = new Uint8Array(header.length + raster.length);
    bytes.set(Array.from(header, (c) => c.charCodeAt(0)), 0);
    bytes.set(raster, header.length);
    const decoded = decodePpm(bytes);
    expect(decoded.w).toBe(2);
    expect(decoded.h).toBe(2);
    expect(decoded.data.every((b) => b === 9)).toBe(true);
  });

  it("rejects bad magic and truncated rasters", () => {
    expect(() => decodePpm(new Uint8Array([0x50, 0x35, 0x0a]))).toThrow(/P6/);
    const short = encodePpm(grayToRgb(makeGray(4, 4, mulberry32(1)))).slice(0, 20);
    expect(() => decodePpm(short)).toThrow(/truncated/);
  });

  it("base64 round-trips arbitrary bytes", () => {
    const rng = mulberry32(9);
    for (const n of [0, 1, 2, 3, 61, 62, 63]) {
      const bytes = new Uint8Array(n);
      for (let i = 0; i < n; i += 1) bytes[i] = randomInt(rng, 0, 256);
      expect(Array.from(fromBase64(toBase64(bytes)))).toEqual(Array.from(bytes));
    }
  });
});
