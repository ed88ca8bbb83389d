/**
 * Pure software rasterizer for the request payload path.
 *
 * HTML canvas getImageData is not guaranteed byte-stable across engines, so
 * the payload never touches it: fragments, strokes, and mask strokes are
 * rendered here with integer-only math. The same functions also feed the
 * on-screen preview.
 */

import { paletteColor } from "./palette.js";
import type { CanvasDocument, GrayImage, MaskStroke, RgbImage, Stroke } from "./types.js";

/** Fragments pasted over white, then stroke ink on top. */
export function renderSketch(doc: CanvasDocument): GrayImage {
  const { width: w, height: h } = doc;
  const gray = new Uint8Array(w * h).fill(255);
  for (const frag of doc.fragments) {
    pasteFragment(gray, w, h, frag.image, frag.rect.x, frag.rect.y, frag.rect.w, frag.rect.h);
  }
  const ink = renderInk(doc.strokes, w, h);
  for (let i = 0; i < gray.length; i += 1) {
    if (ink[i]) gray[i] = 0;
  }
  return { w, h, data: gray };
}

/** Mask layer over black; channel values come from the fixed palette. */
export function renderMask(doc: CanvasDocument): RgbImage {
  const { width: w, height: h } = doc;
  const ids = renderMaskIds(doc.maskStrokes, w, h);
  const rgb = new Uint8Array(3 * w * h);
  for (let i = 0; i < ids.length; i += 1) {
    if (ids[i] > 0) {
      const [r, g, b] = paletteColor(ids[i] - 1);
      rgb[3 * i] = r;
      rgb[3 * i + 1] = g;
      rgb[3 * i + 2] = b;
    }
  }
  return { w, h, data: rgb };
}

/** 1 where sketch ink survives the stroke sequence (erases included). */
export function renderInk(strokes: readonly Stroke[], w: number, h: number): Uint8Array {
  const ink = new Uint8Array(w * h);
  for (const stroke of strokes) {
    stampPolyline(ink, w, h, stroke.points, stroke.radius, stroke.erase ? 0 : 1);
  }
  return ink;
}

/** Palette index + 1 per pixel, 0 where unannotated. */
export function renderMaskIds(strokes: readonly MaskStroke[], w: number, h: number): Uint8Array {
  const ids = new Uint8Array(w * h);
  for (const stroke of strokes) {
    const value = stroke.color < 0 ? 0 : stroke.color + 1;
    stampPolyline(ids, w, h, stroke.points, stroke.radius, value);
  }
  return ids;
}

function pasteFragment(
  dst: Uint8Array,
  dw: number,
  dh: number,
  src: GrayImage,
  x0: number,
  y0: number,
  rw: number,
  rh: number,
): void {
  if (rw <= 0 || rh <= 0) return;
  for (let dy = 0; dy < rh; dy += 1) {
    const y = y0 + dy;
    if (y < 0 || y >= dh) continue;
    const sy = Math.floor((dy * src.h) / rh);
    for (let dx = 0; dx < rw; dx += 1) {
      const x = x0 + dx;
      if (x < 0 || x >= dw) continue;
      const sx = Math.floor((dx * src.w) / rw);
      dst[y * dw + x] = src.data[sy * src.w + sx];
    }
  }
}

function stampPolyline(
  dst: Uint8Array,
  w: number,
  h: number,
  points: readonly { x: number; y: number }[],
  radius: number,
  value: number,
): void {
  if (points.length === 0) return;
  let prev = points[0];
  stampDisk(dst, w, h, prev.x | 0, prev.y | 0, radius, value);
  for (let i = 1; i < points.length; i += 1) {
    const next = points[i];
    bresenham(prev.x | 0, prev.y | 0, next.x | 0, next.y | 0, (x, y) => {
      stampDisk(dst, w, h, x, y, radius, value);
    });
    prev = next;
  }
}

function stampDisk(
  dst: Uint8Array,
  w: number,
  h: number,
  cx: number,
  cy: number,
  radius: number,
  value: number,
): void {
  const r = Math.max(0, radius | 0);
  const r2 = r * r;
  for (let dy = -r; dy <= r; dy += 1) {
    const y = cy + dy;
    if (y < 0 || y >= h) continue;
    for (let dx = -r; dx <= r; dx += 1) {
      if (dx * dx + dy * dy > r2) continue;
      const x = cx + dx;
      if (x < 0 || x >= w) continue;
      dst[y * w + x] = value;
    }
  }
}

function bresenham(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  plot: (x: number, y: number) => void,
): void {
  const dx = Math.abs(x1 - x0);
  const dy = -Math.abs(y1 - y0);
  const sx = x0 < x1 ? 1 : -1;
  const sy = y0 < y1 ? 1 : -1;
  let err = dx + dy;
  let x = x0;
  let y = y0;
  for (;;) {
    plot(x, y);
    if (x === x1 && y === y1) break;
    const e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}
