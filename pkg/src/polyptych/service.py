"""HTTP facade over the pipeline: registry, generation, shuffle, bank build.

The service is stateless: a registry directory (``--registry`` flag or the
NP_REGISTRY_DIR environment variable) holds a ``registry.json`` mapping
model ids to bundle/bank/template files, all loaded once at startup and
immutable while serving. Request images travel as base64-encoded PPM (or
PNG) payloads; every generation endpoint takes an optional seed, and
identical request bodies produce identical responses.

Error contract: 400 for malformed bodies or undecodable/ill-sized images,
404 with {"error": "unknown_model"} for unknown ids, 422 when an input
violates a model constraint (divisibility), 408 when ``timeout_ms`` is
exceeded.
"""

from __future__ import annotations

import base64
import binascii
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .bank import ReferenceBank, build_bank, decompose_multires, load_bank, save_bank
from .canvas import SketchCanvas, decompose_canvas, generate_large, infer_single, shuffle_patches
from .errors import BundleParseError, DimensionError, PolyptychError
from .features import FeatureExtractor
from .imageio import decode_png, decode_ppm, encode_ppm
from .networks import ModelBundle, load_bundle, save_bundle

# re-exported under the service's names for model artifact round-trips
save_model = save_bundle
load_model = load_bundle

REGISTRY_ENV = "NP_REGISTRY_DIR"
REGISTRY_FILE = "registry.json"


@dataclass
class RegistryEntry:
    model_id: str
    genre: str
    bundle: ModelBundle
    bank: ReferenceBank
    templates: list  # (template_id, sketch image [3,H,W])
    stage1_res: int = 32  # training-time stage-1 side length, advisory for UIs


class ModelRegistry:
    """Loads and validates every referenced artifact at construction."""

    def __init__(self, root: str):
        self.root = root
        self.entries: dict = {}
        path = os.path.join(root, REGISTRY_FILE)
        if not os.path.exists(path):
            return
        with open(path) as fh:
            listing = json.load(fh)
        for model_id, item in listing.items():
            bundle = load_bundle(os.path.join(root, item["bundle"]))
            bank = load_bank(os.path.join(root, item["bank"]))
            templates = []
            for tpl in item.get("templates", []):
                with open(os.path.join(root, tpl["file"]), "rb") as fh:
                    templates.append((tpl["id"], decode_ppm(fh.read())))
            self.entries[model_id] = RegistryEntry(
                model_id=model_id,
                genre=item.get("genre", "unknown"),
                bundle=bundle,
                bank=bank,
                templates=templates,
                stage1_res=int(item.get("stage1_res", 32)),
            )


class RequestProblem(Exception):
    """Maps straight to an HTTP status + JSON body."""

    def __init__(self, status: int, error: str, detail: str = ""):
        super().__init__(detail or error)
        self.status = status
        self.error = error
        self.detail = detail


def _decode_image(payload: str, field: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise RequestProblem(400, "bad_image", f"{field}: invalid base64: {exc}") from exc
    if raw[:2] == b"P6":
        try:
            return decode_ppm(raw)
        except BundleParseError as exc:
            raise RequestProblem(400, "bad_image", f"{field}: {exc}") from exc
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        try:
            return decode_png(raw)
        except Exception as exc:
            raise RequestProblem(400, "bad_image", f"{field}: {exc}") from exc
    raise RequestProblem(400, "bad_image", f"{field}: neither PPM nor PNG")


def _encode_image(image: np.ndarray) -> str:
    return base64.b64encode(encode_ppm(image)).decode("ascii")


def _sketch_channel(image: np.ndarray) -> np.ndarray:
    """Incoming sketches are RGB files; collapse to one line channel."""
    return image.mean(axis=0, keepdims=True).astype(np.float32)


class Deadline:
    def __init__(self, timeout_ms):
        self.start = time.monotonic()
        self.timeout_ms = timeout_ms

    def check(self):
        if self.timeout_ms is None:
            return
        elapsed = (time.monotonic() - self.start) * 1000.0
        if elapsed > self.timeout_ms:
            raise RequestProblem(
                408, "timeout", f"generation exceeded timeout_ms={self.timeout_ms}"
            )


def create_app(registry_dir: str | None = None):
    """FastAPI application bound to one registry directory."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    root = registry_dir or os.environ.get(REGISTRY_ENV) or "."
    registry = ModelRegistry(root)
    app = FastAPI(title="polyptych", docs_url=None, redoc_url=None)
    app.state.registry = registry

    @app.exception_handler(RequestProblem)
    async def _problem(request: Request, exc: RequestProblem):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.error, "detail": exc.detail}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"error": "malformed_body", "detail": str(exc.errors())}
        )

    def _entry(model_id: str) -> RegistryEntry:
        entry = registry.entries.get(model_id)
        if entry is None:
            raise RequestProblem(404, "unknown_model", f"no model {model_id!r}")
        return entry

    @app.get("/api/v1/models")
    async def list_models():
        return [
            {
                "model_id": entry.model_id,
                "genre": entry.genre,
                "stage1_res": entry.stage1_res,
            }
            for entry in registry.entries.values()
        ]

    @app.get("/api/v1/models/{model_id}/templates")
    async def list_templates(model_id: str):
        entry = _entry(model_id)
        return [
            {"template_id": tid, "sketch_image": _encode_image(img)}
            for tid, img in entry.templates
        ]

    @app.post("/api/v1/generate")
    async def generate(body: dict):
        if not isinstance(body, dict) or "model_id" not in body or "sketch" not in body:
            raise RequestProblem(400, "malformed_body", "need model_id and sketch")
        entry = _entry(str(body["model_id"]))
        deadline = Deadline(body.get("timeout_ms"))
        sketch_rgb = _decode_image(body["sketch"], "sketch")
        sketch = _sketch_channel(sketch_rgb)
        mask = None
        if body.get("mask") is not None:
            mask = _decode_image(body["mask"], "mask")
            if mask.shape[1:] != sketch.shape[1:]:
                raise RequestProblem(
                    400, "bad_dims",
                    f"mask {mask.shape[1:]} does not match sketch {sketch.shape[1:]}",
                )
        canvas = SketchCanvas(sketch=sketch, mask=mask)
        seed = int(body.get("seed", 0))
        h, w = canvas.height, canvas.width
        started = time.monotonic()
        try:
            if body.get("tile"):
                tile = body["tile"]
                layout = decompose_canvas(
                    w, h,
                    int(tile["tile_w"]), int(tile["tile_h"]),
                    int(tile.get("overlap_w", 0)), int(tile.get("overlap_h", 0)),
                )
                if layout.tile_w % 8 or layout.tile_h % 8:
                    raise RequestProblem(
                        422, "divisibility",
                        f"tile {layout.tile_w}x{layout.tile_h} must be divisible by 8",
                    )
                deadline.check()
                out = _generate_tiled(canvas, entry, layout, seed, deadline)
            else:
                if h % 8 or w % 8:
                    raise RequestProblem(
                        422, "divisibility",
                        f"canvas {w}x{h} must be divisible by 8 (or send tile sizes)",
                    )
                deadline.check()
                out = infer_single(canvas, entry.bundle, entry.bank, seed=seed)
        except DimensionError as exc:
            raise RequestProblem(422, "divisibility", str(exc)) from exc
        deadline.check()
        elapsed_ms = (time.monotonic() - started) * 1000.0
        return {
            "image": _encode_image(out),
            "width": int(out.shape[2]),
            "height": int(out.shape[1]),
            "elapsed_ms": elapsed_ms,
        }

    def _generate_tiled(canvas, entry, layout, seed, deadline):
        from .canvas import blend, render_tile
        from .canvas import _derive_seed as derive

        outputs = [None] * len(layout.tiles)
        for index, rect in layout.tiles:
            deadline.check()
            outputs[index] = render_tile(
                canvas, entry.bundle, entry.bank, rect, derive(seed, index)
            )
        return blend(outputs, layout.scaled(2))

    @app.post("/api/v1/shuffle")
    async def shuffle(body: dict):
        if "sketch" not in body or "grid_n" not in body:
            raise RequestProblem(400, "malformed_body", "need sketch and grid_n")
        sketch_rgb = _decode_image(body["sketch"], "sketch")
        canvas = SketchCanvas(sketch=_sketch_channel(sketch_rgb))
        try:
            out = shuffle_patches(canvas, int(body["grid_n"]), int(body.get("seed", 0)))
        except DimensionError as exc:
            raise RequestProblem(422, "divisibility", str(exc)) from exc
        rgb = np.repeat(out.sketch, 3, axis=0)
        return {"sketch": _encode_image(rgb)}

    @app.post("/api/v1/bank/build")
    async def bank_build(body: dict):
        if "painting" not in body:
            raise RequestProblem(400, "malformed_body", "need painting")
        painting = _decode_image(body["painting"], "painting")
        k = int(body.get("k", 4))
        sizes = [int(s) for s in body.get("sizes", [8, 16, 32])]
        extractor = FeatureExtractor()
        try:
            patches = decompose_multires(painting, sizes)
            bank = build_bank(patches, extractor, k_target=k, sizes=tuple(sizes))
        except PolyptychError as exc:
            raise RequestProblem(400, "bank_error", str(exc)) from exc
        bank_id = f"bank_{int(time.time() * 1000):x}"
        save_bank(bank, os.path.join(root, f"{bank_id}.npbk"))
        return {
            "bank_id": bank_id,
            "k_effective": bank.k,
            "outlier_count": len(bank.outliers),
        }

    return app


def serve(port: int = 8000, registry_dir: str | None = None) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    uvicorn.run(create_app(registry_dir), host="0.0.0.0", port=port)
