"""Command-line entry points for the full pipeline.

Every command is a thin wrapper: parse arguments, load artifacts, call the
library, write results. No pipeline logic lives here.
"""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from .bank import build_bank, decompose_multires, load_bank, pca_project, save_bank
from .canvas import (
    SketchCanvas,
    blend as blend_tiles,
    decompose_canvas,
    extract_sketch,
    generate_large,
    genre_switch,
    infer_single,
    shuffle_patches,
)
from .evaluation import evaluate_sets
from .features import FeatureExtractor
from .imageio import load_image, save_image
from .losses import LossWeights
from .networks import load_bundle, save_bundle
from .training import TrainConfig, train


def _load_rgb(path: str) -> np.ndarray:
    image = load_image(path)
    if image.shape[0] == 1:
        image = np.repeat(image, 3, axis=0)
    return image


def _load_sketch(path: str) -> np.ndarray:
    image = load_image(path)
    if image.shape[0] == 3:
        # Collapse an RGB scan of a line drawing to one channel.
        image = image.mean(axis=0, keepdims=True)
    return image


@click.group()
def main() -> None:
    """Sketch-to-painting pipeline tools."""


@main.group()
def bank() -> None:
    """Reference bank construction and inspection."""


@bank.command("build")
@click.option("--painting", required=True, type=click.Path(exists=True))
@click.option("--sizes", default="8,16,32", show_default=True,
              help="Comma-separated square patch sizes in pixels.")
@click.option("--k", default=4, show_default=True, help="Target category count.")
@click.option("--min-category-size", default=3, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def bank_build(painting, sizes, k, min_category_size, out_path) -> None:
    """Decompose a painting into patches, cluster them, save the bank."""
    image = _load_rgb(painting)
    size_list = [int(s) for s in sizes.split(",") if s]
    patches = decompose_multires(image, size_list)
    result = build_bank(patches, FeatureExtractor(), k_target=k,
                        min_category_size=min_category_size)
    save_bank(result, out_path)
    click.echo(f"bank: {len(result.patches)} patches, k={result.k}, "
               f"{len(result.outliers)} outliers -> {out_path}")


@bank.command("inspect")
@click.option("--bank", "bank_path", required=True, type=click.Path(exists=True))
def bank_inspect(bank_path) -> None:
    """Print category sizes and linkage summary for a saved bank."""
    loaded = load_bank(bank_path)
    click.echo(f"patches: {len(loaded.patches)}")
    click.echo(f"k: {loaded.k}")
    click.echo(f"sizes: {','.join(str(s) for s in loaded.sizes)}")
    click.echo(f"extractor seed: {loaded.extractor_seed}")
    for cat in range(loaded.k):
        members = loaded.members(cat)
        dims = sorted({p.pixels.shape[1] for p in members})
        click.echo(f"category {cat}: {len(members)} patches, sizes {dims}")
    click.echo(f"outliers: {len(loaded.outliers)}")
    click.echo(f"linkage merges: {len(loaded.linkage_trace)}")


@bank.command("pca")
@click.option("--bank", "bank_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def bank_pca(bank_path, out_path) -> None:
    """Project bank embeddings to 2-D and write a points CSV."""
    loaded = load_bank(bank_path)
    points = pca_project([p.embedding for p in loaded.patches])
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["patch", "category", "x", "y"])
        for i, patch in enumerate(loaded.patches):
            writer.writerow([i, patch.category,
                             f"{points[i, 0]:.6f}", f"{points[i, 1]:.6f}"])
    click.echo(f"{len(loaded.patches)} points -> {out_path}")


@main.command("train")
@click.option("--painting", required=True, type=click.Path(exists=True))
@click.option("--bank", "bank_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON file of TrainConfig overrides.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--max-steps", type=int, default=None,
              help="Optional hard cap on total steps (smoke runs).")
def train_cmd(painting, bank_path, config_path, out_dir, max_steps) -> None:
    """Two-stage adversarial training on one painting."""
    image = _load_rgb(painting)
    loaded_bank = load_bank(bank_path)
    overrides = {}
    if config_path:
        with open(config_path) as fh:
            overrides = json.load(fh)
    weights = LossWeights(**overrides.pop("weights", {}))
    cfg = TrainConfig(weights=weights, **overrides)
    result = train(image, loaded_bank, cfg, out_dir=out_dir, max_steps=max_steps)
    final = os.path.join(out_dir, "model.nply")
    save_bundle(result.bundle, final)
    click.echo(f"trained {len(result.rows)} steps over {result.epochs_run} epochs "
               f"({result.stopped}); model -> {final}")


@main.command("eval")
@click.option("--real", "real_dir", required=True, type=click.Path(exists=True))
@click.option("--fake", "fake_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_cmd(real_dir, fake_dir, out_path) -> None:
    """Fidelity metrics between two image directories."""

    def _load_dir(path):
        names = sorted(
            n for n in os.listdir(path)
            if n.lower().endswith((".ppm", ".png"))
        )
        if not names:
            raise click.ClickException(f"no .ppm/.png images in {path}")
        return [load_image(os.path.join(path, n)) for n in names]

    report = evaluate_sets(_load_dir(real_dir), _load_dir(fake_dir),
                           FeatureExtractor())
    with open(out_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    click.echo(f"report -> {out_path}")


@main.command("infer")
@click.option("--sketch", "sketch_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--bank", "bank_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--tile", nargs=4, type=int, default=None,
              help="tile_w tile_h overlap_w overlap_h for tiled generation.")
def infer_cmd(sketch_path, mask_path, model_path, bank_path, out_path, seed, tile) -> None:
    """Render a sketch (optionally tiled) to a 2x painting."""
    sketch = _load_sketch(sketch_path)
    mask = _load_rgb(mask_path) if mask_path else None
    canvas = SketchCanvas(sketch=sketch, mask=mask)
    model = load_bundle(model_path)
    loaded_bank = load_bank(bank_path)
    if tile:
        tile_w, tile_h, overlap_w, overlap_h = tile
        layout = decompose_canvas(canvas.width, canvas.height,
                                  tile_w, tile_h, overlap_w, overlap_h)
        painting = generate_large(canvas, model, loaded_bank, layout, seed=seed)
    else:
        painting = infer_single(canvas, model, loaded_bank, seed=seed)
    save_image(out_path, painting)
    click.echo(f"{painting.shape[2]}x{painting.shape[1]} painting -> {out_path}")


@main.command("blend")
@click.option("--tiles", "tile_paths", required=True, multiple=True,
              type=click.Path(exists=True),
              help="Tile images in layout index order (repeat the flag).")
@click.option("--canvas", nargs=2, type=int, required=True, help="canvas_w canvas_h")
@click.option("--tile-size", nargs=2, type=int, required=True, help="tile_w tile_h")
@click.option("--overlap", nargs=2, type=int, required=True, help="overlap_w overlap_h")
@click.option("--out", "out_path", required=True, type=click.Path())
def blend_cmd(tile_paths, canvas, tile_size, overlap, out_path) -> None:
    """Cross-fade pre-rendered tiles into one canvas."""
    canvas_w, canvas_h = canvas
    layout = decompose_canvas(canvas_w, canvas_h, tile_size[0], tile_size[1],
                              overlap[0], overlap[1])
    if len(tile_paths) != len(layout.tiles):
        raise click.ClickException(
            f"layout needs {len(layout.tiles)} tiles, got {len(tile_paths)}")
    tiles = [_load_rgb(p) for p in tile_paths]
    save_image(out_path, blend_tiles(tiles, layout))
    click.echo(f"blended {len(tiles)} tiles -> {out_path}")


@main.command("shuffle")
@click.option("--sketch", "sketch_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", type=click.Path(exists=True))
@click.option("--grid", default=4, show_default=True, type=int)
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--mask-out", "mask_out", type=click.Path())
def shuffle_cmd(sketch_path, mask_path, grid, seed, out_path, mask_out) -> None:
    """Permute sketch (and mask) blocks on an n x n grid."""
    canvas = SketchCanvas(sketch=_load_sketch(sketch_path),
                          mask=_load_rgb(mask_path) if mask_path else None)
    shuffled = shuffle_patches(canvas, grid, seed)
    save_image(out_path, shuffled.sketch)
    if mask_out:
        save_image(mask_out, shuffled.mask)
    click.echo(f"shuffled {grid}x{grid} blocks (seed {seed}) -> {out_path}")


@main.command("switch")
@click.option("--painting", required=True, type=click.Path(exists=True))
@click.option("--target-model", required=True, type=click.Path(exists=True))
@click.option("--target-bank", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--sketch-out", type=click.Path(),
              help="Also save the intermediate extracted sketch.")
@click.option("--seed", default=0, show_default=True, type=int)
def switch_cmd(painting, target_model, target_bank, out_path, sketch_out, seed) -> None:
    """Re-render a painting in another genre via its extracted sketch."""
    result = genre_switch(_load_rgb(painting), load_bundle(target_model),
                          load_bank(target_bank), seed=seed)
    save_image(out_path, result.painting)
    if sketch_out:
        save_image(sketch_out, result.sketch)
    click.echo(f"switched genre -> {out_path}")


@main.command("sketch")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def sketch_cmd(image_path, out_path) -> None:
    """Extract a dark-lines-on-white sketch from an image."""
    save_image(out_path, extract_sketch(_load_rgb(image_path)))
    click.echo(f"sketch -> {out_path}")


@main.command("serve")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--registry", "registry_dir", type=click.Path(),
              help="Registry directory; falls back to NP_REGISTRY_DIR.")
def serve_cmd(port, registry_dir) -> None:
    """Run the HTTP generation service."""
    from .service import serve

    serve(port=port, registry_dir=registry_dir)


if __name__ == "__main__":
    sys.exit(main())
