/**
 * Document model and pure edit operations.
 *
 * Every edit returns a new document; existing documents and their image
 * buffers are never mutated. That keeps undo/redo trivially exact: history
 * stores references, not copies.
 */

import { rgbToGray } from "./ppm.js";
import type {
  CanvasDocument,
  Fragment,
  GrayImage,
  MaskStroke,
  RgbImage,
  Stroke,
} from "./types.js";

/** Matches the generator's spatial divisibility requirement. */
export const SNAP = 8;

let fragmentCounter = 0;

export function snap(v: number): number {
  return Math.round(v / SNAP) * SNAP;
}

export function emptyDocument(width: number, height: number): CanvasDocument {
  if (width <= 0 || height <= 0 || width % SNAP !== 0 || height % SNAP !== 0) {
    throw new Error(`canvas dims must be positive multiples of ${SNAP}: ${width}x${height}`);
  }
  return {
    width,
    height,
    fragments: [],
    strokes: [],
    maskStrokes: [],
    modelId: null,
    lastResult: null,
  };
}

/** Placement x/y snap to the 8px grid; size is kept as given. */
export function addFragment(
  doc: CanvasDocument,
  image: GrayImage,
  x: number,
  y: number,
  w?: number,
  h?: number,
): CanvasDocument {
  fragmentCounter += 1;
  const frag: Fragment = {
    id: fragmentCounter,
    image,
    rect: { x: snap(x), y: snap(y), w: w ?? image.w, h: h ?? image.h },
  };
  return { ...doc, fragments: [...doc.fragments, frag] };
}

export function moveFragment(doc: CanvasDocument, index: number, x: number, y: number): CanvasDocument {
  const frag = doc.fragments[index];
  if (!frag) return doc;
  const moved: Fragment = { ...frag, rect: { ...frag.rect, x: snap(x), y: snap(y) } };
  const fragments = doc.fragments.slice();
  fragments[index] = moved;
  return { ...doc, fragments };
}

export function removeFragment(doc: CanvasDocument, index: number): CanvasDocument {
  if (index < 0 || index >= doc.fragments.length) return doc;
  const fragments = doc.fragments.filter((_, i) => i !== index);
  return { ...doc, fragments };
}

export function addStroke(doc: CanvasDocument, stroke: Stroke): CanvasDocument {
  return { ...doc, strokes: [...doc.strokes, stroke] };
}

export function addMaskStroke(doc: CanvasDocument, stroke: MaskStroke): CanvasDocument {
  return { ...doc, maskStrokes: [...doc.maskStrokes, stroke] };
}

export function clearAnnotations(doc: CanvasDocument): CanvasDocument {
  return { ...doc, strokes: [], maskStrokes: [] };
}

export function setModel(doc: CanvasDocument, modelId: string | null): CanvasDocument {
  return { ...doc, modelId };
}

export function setResult(doc: CanvasDocument, image: RgbImage | null): CanvasDocument {
  return { ...doc, lastResult: image };
}

/**
 * The steering loop: bring the last generated image back onto the canvas
 * as a fragment so the next round of strokes refines it.
 */
export function importResult(doc: CanvasDocument, x = 0, y = 0): CanvasDocument {
  if (!doc.lastResult) return doc;
  return addFragment(doc, rgbToGray(doc.lastResult), x, y, doc.width, doc.height);
}

/** Replace all layers with one full-canvas fragment (used after shuffle). */
export function replaceWithFragment(doc: CanvasDocument, image: GrayImage): CanvasDocument {
  const cleared: CanvasDocument = { ...doc, fragments: [], strokes: [], maskStrokes: [] };
  return addFragment(cleared, image, 0, 0, doc.width, doc.height);
}
