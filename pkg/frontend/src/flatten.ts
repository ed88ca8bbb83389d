/**
 * Deterministic document flattening into request payloads.
 *
 * The sketch travels as a grayscale-as-RGB PPM (the service collapses it to
 * its line channel); the mask travels as an RGB PPM whose colors come from
 * the fixed palette. Same document in, same bytes out, on every engine.
 */

import { encodePpm, grayToRgb, toBase64 } from "./ppm.js";
import { renderMask, renderSketch } from "./raster.js";
import type { CanvasDocument } from "./types.js";

export interface FlattenedPayload {
  /** base64 PPM, dark lines on white */
  readonly sketch: string;
  /** base64 PPM, palette colors on black */
  readonly mask: string;
  readonly width: number;
  readonly height: number;
}

export function flatten(doc: CanvasDocument): FlattenedPayload {
  const sketchBytes = encodePpm(grayToRgb(renderSketch(doc)));
  const maskBytes = encodePpm(renderMask(doc));
  return {
    sketch: toBase64(sketchBytes),
    mask: toBase64(maskBytes),
    width: doc.width,
    height: doc.height,
  };
}

/** FNV-1a over both payload strings; cheap change detection for the UI. */
export function payloadHash(payload: FlattenedPayload): string {
  let h = 0x811c9dc5;
  const mix = (text: string) => {
    for (let i = 0; i < text.length; i += 1) {
      h ^= text.charCodeAt(i);
      h = Math.imul(h, 0x01000193);
    }
  };
  mix(payload.sketch);
  mix("|");
  mix(payload.mask);
  return (h >>> 0).toString(16).padStart(8, "0");
}
