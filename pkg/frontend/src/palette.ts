/** Fixed 8-color semantic palette for the mask layer. */

export interface PaletteEntry {
  readonly name: string;
  readonly rgb: readonly [number, number, number];
}

/** Index into this array is the wire value painted into the mask image. */
export const PALETTE: readonly PaletteEntry[] = [
  { name: "sky", rgb: [96, 160, 224] },
  { name: "water", rgb: [48, 96, 192] },
  { name: "mountain", rgb: [112, 96, 80] },
  { name: "forest", rgb: [32, 128, 64] },
  { name: "field", rgb: [176, 192, 96] },
  { name: "building", rgb: [160, 64, 48] },
  { name: "figure", rgb: [224, 160, 112] },
  { name: "path", rgb: [192, 176, 144] },
];

export function paletteColor(index: number): readonly [number, number, number] {
  const entry = PALETTE[index];
  if (!entry) {
    throw new RangeError(`palette index out of range: ${index}`);
  }
  return entry.rgb;
}
