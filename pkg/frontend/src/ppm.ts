/**
 * Canonical PPM (P6) encode/decode plus base64 helpers.
 *
 * The writer always emits `P6\n<w> <h>\n255\n` followed by the raster, so
 * identical pixels serialize to identical bytes on every engine. The reader
 * tolerates arbitrary whitespace and `#` comments in the header.
 */

import type { GrayImage, RgbImage } from "./types.js";

export function encodePpm(image: RgbImage): Uint8Array {
  const { w, h, data } = image;
  if (data.length !== 3 * w * h) {
    throw new Error(`raster length ${data.length} does not match ${w}x${h}`);
  }
  const header = `P6\n${w} ${h}\n255\n`;
  const headerBytes = asciiBytes(header);
  const out = new Uint8Array(headerBytes.length + data.length);
  out.set(headerBytes, 0);
  out.set(data, headerBytes.length);
  return out;
}

export function decodePpm(bytes: Uint8Array): RgbImage {
  if (bytes.length < 2 || bytes[0] !== 0x50 || bytes[1] !== 0x36) {
    throw new Error("not a P6 ppm");
  }
  let pos = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    // skip whitespace and comment lines
    while (pos < bytes.length) {
      const b = bytes[pos];
      if (b === 0x23) {
        while (pos < bytes.length && bytes[pos] !== 0x0a) pos += 1;
      } else if (b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d) {
        pos += 1;
      } else {
        break;
      }
    }
    let start = pos;
    while (pos < bytes.length && bytes[pos] >= 0x30 && bytes[pos] <= 0x39) pos += 1;
    if (pos === start) {
      throw new Error("malformed ppm header");
    }
    let value = 0;
    for (let i = start; i < pos; i += 1) value = value * 10 + (bytes[i] - 0x30);
    tokens.push(value);
  }
  const [w, h, maxval] = tokens;
  if (maxval !== 255) {
    throw new Error(`unsupported maxval ${maxval}`);
  }
  pos += 1; // single whitespace byte after maxval
  const need = 3 * w * h;
  if (bytes.length - pos < need) {
    throw new Error(`truncated ppm raster: need ${need}, have ${bytes.length - pos}`);
  }
  return { w, h, data: bytes.slice(pos, pos + need) };
}

export function grayToRgb(image: GrayImage): RgbImage {
  const { w, h, data } = image;
  const out = new Uint8Array(3 * w * h);
  for (let i = 0, j = 0; i < data.length; i += 1, j += 3) {
    out[j] = data[i];
    out[j + 1] = data[i];
    out[j + 2] = data[i];
  }
  return { w, h, data: out };
}

export function rgbToGray(image: RgbImage): GrayImage {
  const { w, h, data } = image;
  const out = new Uint8Array(w * h);
  for (let i = 0, j = 0; i < out.length; i += 1, j += 3) {
    // Rec.601 luma, rounded
    out[i] = Math.round(0.299 * data[j] + 0.587 * data[j + 1] + 0.114 * data[j + 2]);
  }
  return { w, h, data: out };
}

const B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

export function toBase64(bytes: Uint8Array): string {
  let out = "";
  let i = 0;
  for (; i + 2 < bytes.length; i += 3) {
    const n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += B64[(n >> 18) & 63] + B64[(n >> 12) & 63] + B64[(n >> 6) & 63] + B64[n & 63];
  }
  const rest = bytes.length - i;
  if (rest === 1) {
    const n = bytes[i] << 16;
    out += B64[(n >> 18) & 63] + B64[(n >> 12) & 63] + "==";
  } else if (rest === 2) {
    const n = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += B64[(n >> 18) & 63] + B64[(n >> 12) & 63] + B64[(n >> 6) & 63] + "=";
  }
  return out;
}

export function fromBase64(text: string): Uint8Array {
  const clean = text.replace(/[\s=]+$/g, "").replace(/\s+/g, "");
  const lut = new Int16Array(128).fill(-1);
  for (let i = 0; i < B64.length; i += 1) lut[B64.charCodeAt(i)] = i;
  const out = new Uint8Array(Math.floor((clean.length * 3) / 4));
  let acc = 0;
  let bits = 0;
  let j = 0;
  for (let i = 0; i < clean.length; i += 1) {
    const v = lut[clean.charCodeAt(i)];
    if (v < 0) {
      throw new Error(`invalid base64 character at ${i}`);
    }
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out[j] = (acc >> bits) & 0xff;
      j += 1;
    }
  }
  return out.subarray(0, j);
}

function asciiBytes(text: string): Uint8Array {
  const out = new Uint8Array(text.length);
  for (let i = 0; i < text.length; i += 1) out[i] = text.charCodeAt(i);
  return out;
}
