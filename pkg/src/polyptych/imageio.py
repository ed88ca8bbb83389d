"""Image file I/O: binary PPM (P6) as the canonical format, PNG via Pillow.

Images are [3,H,W] float32 arrays in [0,1] everywhere in this package. PPM
is written in one canonical byte layout (``P6\\n<w> <h>\\n255\\n`` + raw RGB),
so encoding the same array twice yields identical bytes; the reader accepts
any standard P6 file including comments. PNG support is a convenience for
viewing; PPM is the format round-trip tests rely on.
"""

from __future__ import annotations

import io

import numpy as np

from .errors import BundleParseError


def to_u8(image: np.ndarray) -> np.ndarray:
    """[3,H,W] or [1,H,W] float in [0,1] -> [H,W,3] uint8 (round-to-nearest)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3 and image.shape[0] == 1:
        image = np.repeat(image, 3, axis=0)
    arr = np.clip(np.round(image * 255.0), 0, 255)
    return arr.astype(np.uint8).transpose(1, 2, 0)


def from_u8(raster: np.ndarray) -> np.ndarray:
    """[H,W,3] uint8 -> [3,H,W] float32 in [0,1]."""
    return raster.astype(np.float32).transpose(2, 0, 1) / np.float32(255.0)


def encode_ppm(image: np.ndarray) -> bytes:
    raster = to_u8(image)
    h, w = raster.shape[0], raster.shape[1]
    return b"P6\n%d %d\n255\n" % (w, h) + raster.tobytes()


def _next_token(data: bytes, pos: int) -> tuple:
    """Skip whitespace and '#' comments, return (token, next_pos)."""
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise BundleParseError("unexpected end of PPM header", offset=start)
    return data[start:pos], pos


def decode_ppm(data: bytes) -> np.ndarray:
    if data[:2] != b"P6":
        raise BundleParseError(f"not a binary PPM (magic {data[:2]!r})", offset=0)
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _next_token(data, pos)
        if not token.isdigit():
            raise BundleParseError(f"bad PPM header token {token!r}", offset=pos)
        fields.append(int(token))
    w, h, maxval = fields
    if maxval != 255:
        raise BundleParseError(f"only maxval 255 supported, got {maxval}", offset=pos)
    pos += 1  # single whitespace byte separates header from raster
    need = w * h * 3
    if len(data) < pos + need:
        raise BundleParseError("PPM raster truncated", offset=pos)
    raster = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(h, w, 3)
    return from_u8(raster)


def encode_png(image: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(to_u8(image), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    from PIL import Image

    with Image.open(io.BytesIO(data)) as img:
        return from_u8(np.asarray(img.convert("RGB")))


def save_image(path, image: np.ndarray) -> None:
    path = str(path)
    if path.endswith(".ppm"):
        payload = encode_ppm(image)
    elif path.endswith(".png"):
        payload = encode_png(image)
    else:
        raise ValueError(f"unsupported image extension: {path}")
    with open(path, "wb") as fh:
        fh.write(payload)


def load_image(path) -> np.ndarray:
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if path.endswith(".ppm"):
        return decode_ppm(data)
    if path.endswith(".png"):
        return decode_png(data)
    raise ValueError(f"unsupported image extension: {path}")
