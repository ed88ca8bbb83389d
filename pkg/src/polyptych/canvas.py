"""Canvas-level pipeline: sketch extraction, tiling, blending, big renders.

The pieces here wrap the networks so arbitrarily wide canvases can be
painted on desk hardware: a deterministic edge pipeline stands in for a
learned sketch extractor, the canvas is cut into overlapping tiles that each
satisfy the model's divisibility constraint, tiles are generated
independently (any order, even in parallel), and overlaps are cross-faded
with linear ramps that form a partition of unity, so constant inputs survive
blending exactly and non-overlap pixels are copied verbatim.

In a horizontal overlap of width W the left tile's weight at local offset i
is (W - i)/W and the right tile's is i/W: the blend equals the left tile
exactly at i=0 and hands over fully at i=W, so there is no seam at either
boundary. Vertical overlaps behave the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, resize
from .bank import ReferenceBank, sample_ordered_refs
from .errors import DimensionError
from .networks import ModelBundle

SKETCH_HI_THRESHOLD = 0.2
SKETCH_LO_THRESHOLD = 0.08

# Rec. 601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass
class TileLayout:
    canvas_w: int
    canvas_h: int
    tile_w: int
    tile_h: int
    overlap_w: int
    overlap_h: int
    tiles: list  # (index, (x, y, w, h))

    def scaled(self, factor: int) -> "TileLayout":
        return TileLayout(
            canvas_w=self.canvas_w * factor,
            canvas_h=self.canvas_h * factor,
            tile_w=self.tile_w * factor,
            tile_h=self.tile_h * factor,
            overlap_w=self.overlap_w * factor,
            overlap_h=self.overlap_h * factor,
            tiles=[
                (i, (x * factor, y * factor, w * factor, h * factor))
                for i, (x, y, w, h) in self.tiles
            ],
        )


@dataclass
class SketchCanvas:
    """User-facing drawing: line sketch plus optional semantic color mask."""

    sketch: np.ndarray  # [1,H,W] float32 in [0,1], dark lines near 0
    mask: np.ndarray | None = None  # [3,H,W] float32 in [0,1]; None = all-zero
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        if self.sketch.ndim == 2:
            self.sketch = self.sketch[None]
        if self.sketch.ndim != 3 or self.sketch.shape[0] != 1:
            raise DimensionError(f"sketch must be [1,H,W], got {self.sketch.shape}")
        if self.mask is None:
            self.mask = np.zeros((3,) + self.sketch.shape[1:], dtype=np.float32)
        if self.mask.shape != (3,) + self.sketch.shape[1:]:
            raise DimensionError(
                f"mask shape {self.mask.shape} must be [3,{self.sketch.shape[1]},{self.sketch.shape[2]}]"
            )

    @property
    def height(self) -> int:
        return self.sketch.shape[1]

    @property
    def width(self) -> int:
        return self.sketch.shape[2]

    def model_input(self) -> np.ndarray:
        """[4,H,W]: sketch luminance channel then the color mask."""
        return np.concatenate([self.sketch, self.mask]).astype(np.float32)


def _sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    g = np.pad(gray, 1, mode="edge")
    gx = (
        (g[:-2, 2:] + 2 * g[1:-1, 2:] + g[2:, 2:])
        - (g[:-2, :-2] + 2 * g[1:-1, :-2] + g[2:, :-2])
    )
    gy = (
        (g[2:, :-2] + 2 * g[2:, 1:-1] + g[2:, 2:])
        - (g[:-2, :-2] + 2 * g[:-2, 1:-1] + g[:-2, 2:])
    )
    return np.sqrt(gx * gx + gy * gy)


def _hysteresis(mag: np.ndarray, hi: float, lo: float) -> np.ndarray:
    strong = mag >= hi
    weak = mag >= lo
    keep = strong.copy()
    while True:
        p = np.pad(keep, 1)
        grown = np.zeros_like(keep)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy or dx:
                    grown |= p[1 + dy : p.shape[0] - 1 + dy, 1 + dx : p.shape[1] - 1 + dx]
        new = keep | (weak & grown)
        if np.array_equal(new, keep):
            return keep
        keep = new


def _thin_once(img: np.ndarray) -> np.ndarray:
    """One full thinning iteration (both subpasses) on a binary image."""
    out = img.astype(np.uint8)
    for pass_two in (False, True):
        p = np.pad(out, 1)
        # neighbors clockwise from north
        p2 = p[:-2, 1:-1]
        p3 = p[:-2, 2:]
        p4 = p[1:-1, 2:]
        p5 = p[2:, 2:]
        p6 = p[2:, 1:-1]
        p7 = p[2:, :-2]
        p8 = p[1:-1, :-2]
        p9 = p[:-2, :-2]
        ring = [p2, p3, p4, p5, p6, p7, p8, p9]
        b = sum(n.astype(np.int32) for n in ring)
        a = sum(
            ((ring[i] == 0) & (ring[(i + 1) % 8] == 1)).astype(np.int32)
            for i in range(8)
        )
        if pass_two:
            c1, c2 = p2 * p4 * p8, p2 * p6 * p8
        else:
            c1, c2 = p2 * p4 * p6, p4 * p6 * p8
        remove = (out == 1) & (b >= 2) & (b <= 6) & (a == 1) & (c1 == 0) & (c2 == 0)
        out = np.where(remove, 0, out).astype(np.uint8)
    return out


def extract_sketch(image: np.ndarray) -> np.ndarray:
    """RGB [3,H,W] -> binary line sketch [1,H,W], dark lines on white.

    Grayscale, Sobel gradient magnitude normalized to [0,1], hysteresis
    thresholding, one thinning pass, inversion. Pure and deterministic.
    """
    if image.ndim != 3 or image.shape[0] != 3:
        raise DimensionError(f"extract_sketch expects [3,H,W], got {image.shape}")
    if image.shape[1] < 3 or image.shape[2] < 3:
        raise DimensionError("image must be at least 3x3")
    gray = np.tensordot(_LUMA, image.astype(np.float64), axes=(0, 0))
    mag = _sobel_magnitude(gray)
    peak = mag.max()
    if peak > 0:
        mag = mag / peak
    binary = _hysteresis(mag, SKETCH_HI_THRESHOLD, SKETCH_LO_THRESHOLD)
    thin = _thin_once(binary)
    return (1.0 - thin).astype(np.float32)[None]


def _axis_positions(canvas: int, tile: int, stride: int) -> list:
    positions = list(range(0, canvas - tile + 1, stride))
    if positions[-1] != canvas - tile:  # snap the last tile to the edge
        positions.append(canvas - tile)
    return positions


def decompose_canvas(
    canvas_w: int,
    canvas_h: int,
    tile_w: int,
    tile_h: int,
    overlap_w: int,
    overlap_h: int,
) -> TileLayout:
    """Overlapping tiles at stride (tile - overlap), last tile edge-snapped."""
    if tile_w > canvas_w or tile_h > canvas_h:
        raise DimensionError(
            f"tile {tile_w}x{tile_h} exceeds canvas {canvas_w}x{canvas_h}"
        )
    if overlap_w >= tile_w or overlap_h >= tile_h:
        raise DimensionError("overlap must be smaller than the tile")
    if overlap_w < 0 or overlap_h < 0:
        raise DimensionError("overlap must be non-negative")
    xs = _axis_positions(canvas_w, tile_w, tile_w - overlap_w)
    ys = _axis_positions(canvas_h, tile_h, tile_h - overlap_h)
    tiles = []
    for y in ys:
        for x in xs:
            tiles.append((len(tiles), (x, y, tile_w, tile_h)))
    return TileLayout(canvas_w, canvas_h, tile_w, tile_h, overlap_w, overlap_h, tiles)


def _tile_weights(layout: TileLayout, index: int) -> tuple:
    """Separable ramp weights (wy, wx) for one tile, from actual overlaps."""
    x, y, w, h = layout.tiles[index][1]
    left = right = top = bottom = 0
    for j, (ox, oy, ow, oh) in (t for t in layout.tiles if t[0] != index):
        if oy < y + h and y < oy + oh:  # rows intersect
            if ox < x:
                left = max(left, min(ox + ow - x, w - 1))
            elif ox > x:
                right = max(right, min(x + w - ox, w - 1))
        if ox < x + w and x < ox + ow:  # columns intersect
            if oy < y:
                top = max(top, min(oy + oh - y, h - 1))
            elif oy > y:
                bottom = max(bottom, min(y + h - oy, h - 1))
    wx = np.ones(w, dtype=np.float64)
    wy = np.ones(h, dtype=np.float64)
    if left:
        wx[:left] = np.arange(left, dtype=np.float64) / left
    if right:
        wx[w - right :] = (right - np.arange(right, dtype=np.float64)) / right
    if top:
        wy[:top] = np.arange(top, dtype=np.float64) / top
    if bottom:
        wy[h - bottom :] = (bottom - np.arange(bottom, dtype=np.float64)) / bottom
    return wy, wx


def blend(tiles: list, layout: TileLayout) -> np.ndarray:
    """Cross-fade tile images into one canvas image."""
    if len(tiles) != len(layout.tiles):
        raise DimensionError(
            f"{len(tiles)} tile images for {len(layout.tiles)} layout rects"
        )
    channels = tiles[0].shape[0]
    dtype = tiles[0].dtype
    acc = np.zeros((channels, layout.canvas_h, layout.canvas_w), dtype=dtype)
    wsum = np.zeros((layout.canvas_h, layout.canvas_w), dtype=dtype)
    for index, (x, y, w, h) in layout.tiles:
        img = tiles[index]
        if img.shape != (channels, h, w):
            raise DimensionError(
                f"tile {index} image shape {img.shape} does not match rect {(x, y, w, h)}"
            )
        wy, wx = _tile_weights(layout, index)
        mask = (wy[:, None] * wx[None, :]).astype(dtype)
        acc[:, y : y + h, x : x + w] += img * mask
        wsum[y : y + h, x : x + w] += mask
    return acc / wsum


def _refs_for_model(
    bank: ReferenceBank, model: ModelBundle, h: int, w: int, seed: int
):
    n_refs = model.config["n_refs"]
    if n_refs % bank.k:
        raise DimensionError(
            f"model expects {n_refs} references but bank has {bank.k} categories; "
            f"{n_refs} must be a multiple of {bank.k}"
        )
    return sample_ordered_refs(bank, n_refs // bank.k, h, w, seed)


def _derive_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def render_tile(
    canvas: SketchCanvas, model: ModelBundle, bank: ReferenceBank, rect, seed: int
) -> np.ndarray:
    """Run the full two-stage model on one canvas rect; returns [3,2h,2w]."""
    x, y, w, h = rect
    tile_input = canvas.model_input()[:, y : y + h, x : x + w]
    refs = _refs_for_model(bank, model, h, w, seed)
    _, rgb_hi = model.run(tile_input[None], refs)
    return rgb_hi.data[0]


def generate_large(
    canvas: SketchCanvas,
    model: ModelBundle,
    bank: ReferenceBank,
    layout: TileLayout,
    seed: int = 0,
) -> np.ndarray:
    """Tile-by-tile generation blended at 2x scale; [3, 2H, 2W] output.

    Reference sampling is seeded per tile index, so tiles can run in any
    order (or in parallel) without changing the output.
    """
    if layout.canvas_h != canvas.height or layout.canvas_w != canvas.width:
        raise DimensionError(
            f"layout {layout.canvas_w}x{layout.canvas_h} does not match "
            f"canvas {canvas.width}x{canvas.height}"
        )
    outputs = [None] * len(layout.tiles)
    for index, rect in layout.tiles:
        outputs[index] = render_tile(canvas, model, bank, rect, _derive_seed(seed, index))
    return blend(outputs, layout.scaled(2))


def infer_single(
    canvas: SketchCanvas, model: ModelBundle, bank: ReferenceBank, seed: int = 0
) -> np.ndarray:
    """Untiled inference over the whole canvas; [3, 2H, 2W] output."""
    rect = (0, 0, canvas.width, canvas.height)
    return render_tile(canvas, model, bank, rect, _derive_seed(seed, 0))


def shuffle_patches(canvas: SketchCanvas, grid_n: int, seed: int) -> SketchCanvas:
    """Seeded uniform permutation of grid_n x grid_n blocks, sketch and mask."""
    h, w = canvas.height, canvas.width
    if h % grid_n or w % grid_n:
        raise DimensionError(
            f"canvas {w}x{h} not divisible into a {grid_n}x{grid_n} grid"
        )
    bh, bw = h // grid_n, w // grid_n
    perm = np.random.default_rng(seed).permutation(grid_n * grid_n)
    sketch = np.empty_like(canvas.sketch)
    mask = np.empty_like(canvas.mask)
    provenance = []
    for dst, src in enumerate(perm):
        sy, sx = divmod(int(src), grid_n)
        dy, dx = divmod(dst, grid_n)
        src_sl = np.s_[:, sy * bh : (sy + 1) * bh, sx * bw : (sx + 1) * bw]
        dst_sl = np.s_[:, dy * bh : (dy + 1) * bh, dx * bw : (dx + 1) * bw]
        sketch[dst_sl] = canvas.sketch[src_sl]
        mask[dst_sl] = canvas.mask[src_sl]
        provenance.append({"src": [sx * bw, sy * bh, bw, bh], "dst": [dx * bw, dy * bh, bw, bh]})
    return SketchCanvas(sketch=sketch, mask=mask, provenance=provenance)


@dataclass
class GenreSwitchResult:
    painting: np.ndarray  # [3, 2H, 2W]
    sketch: np.ndarray  # [1, H, W], the intermediate extracted once


def genre_switch(
    painting: np.ndarray,
    target_model: ModelBundle,
    target_bank: ReferenceBank,
    seed: int = 0,
) -> GenreSwitchResult:
    """Re-render a painting in another genre via its extracted sketch."""
    sketch = extract_sketch(painting)
    canvas = SketchCanvas(sketch=sketch)
    out = infer_single(canvas, target_model, target_bank, seed=seed)
    return GenreSwitchResult(painting=out, sketch=sketch)


def downsample_half(image: np.ndarray) -> np.ndarray:
    """Bilinear halving, used to build stage-1 supervision targets."""
    t = resize(
        Tensor(image[None]), image.shape[1] // 2, image.shape[2] // 2, mode="bilinear"
    )
    return t.data[0]
