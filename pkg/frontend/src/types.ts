/** Shared data shapes for the studio document and images. */

/** Single-channel 8-bit image, row-major. */
export interface GrayImage {
  readonly w: number;
  readonly h: number;
  /** length w*h, 0 = black, 255 = white */
  readonly data: Uint8Array;
}

/** Interleaved 8-bit RGB image, row-major (RGBRGB...). */
export interface RgbImage {
  readonly w: number;
  readonly h: number;
  /** length 3*w*h */
  readonly data: Uint8Array;
}

export interface Rect {
  readonly x: number;
  readonly y: number;
  readonly w: number;
  readonly h: number;
}

/** A placed painting fragment. Image data is immutable once created. */
export interface Fragment {
  readonly id: number;
  readonly image: GrayImage;
  readonly rect: Rect;
}

export interface StrokePoint {
  readonly x: number;
  readonly y: number;
}

/** Freehand line on the sketch layer; erase lifts earlier ink. */
export interface Stroke {
  readonly points: readonly StrokePoint[];
  readonly radius: number;
  readonly erase: boolean;
}

/** Semantic-color annotation on the mask layer. */
export interface MaskStroke {
  readonly points: readonly StrokePoint[];
  readonly radius: number;
  /** 0..7 palette index; -1 erases */
  readonly color: number;
}

/**
 * The whole editable state. Every field is treated as immutable; edits
 * produce new documents so undo/redo can hold plain references.
 */
export interface CanvasDocument {
  readonly width: number;
  readonly height: number;
  readonly fragments: readonly Fragment[];
  readonly strokes: readonly Stroke[];
  readonly maskStrokes: readonly MaskStroke[];
  readonly modelId: string | null;
  readonly lastResult: RgbImage | null;
}

export interface TileSpec {
  readonly tile_w: number;
  readonly tile_h: number;
  readonly overlap_w: number;
  readonly overlap_h: number;
}
