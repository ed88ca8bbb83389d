/**
 * DOM wiring. All state lives in StudioController; this file only routes
 * pointer/button events in and paints previews out. Compiled output is
 * loaded as an ES module by index.html.
 */

import { StudioController } from "./controller.js";
import { PALETTE } from "./palette.js";
import { renderMaskIds, renderSketch } from "./raster.js";
import type { StrokePoint } from "./types.js";

type Tool = "draw" | "erase" | "mask" | "mask-erase" | "move";

interface UiState {
  tool: Tool;
  color: number;
  radius: number;
  dragIndex: number;
  points: StrokePoint[];
}

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

export function startApp(baseUrl: string): StudioController {
  const controller = new StudioController(baseUrl, 256, 256);
  const state: UiState = { tool: "draw", color: 0, radius: 2, dragIndex: -1, points: [] };

  const canvas = $("studio-canvas") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d context unavailable");

  const paint = () => {
    const doc = controller.doc;
    canvas.width = doc.width;
    canvas.height = doc.height;
    const sketch = renderSketch(doc);
    const ids = renderMaskIds(doc.maskStrokes, doc.width, doc.height);
    const rgba = new Uint8ClampedArray(4 * doc.width * doc.height);
    for (let i = 0; i < sketch.data.length; i += 1) {
      let r = sketch.data[i];
      let g = sketch.data[i];
      let b = sketch.data[i];
      if (ids[i] > 0) {
        // 50% tint so lines stay visible under annotations
        const [mr, mg, mb] = PALETTE[ids[i] - 1].rgb;
        r = (r + mr) >> 1;
        g = (g + mg) >> 1;
        b = (b + mb) >> 1;
      }
      rgba[4 * i] = r;
      rgba[4 * i + 1] = g;
      rgba[4 * i + 2] = b;
      rgba[4 * i + 3] = 255;
    }
    ctx.putImageData(new ImageData(rgba, doc.width, doc.height), 0, 0);

    const result = $("result") as HTMLCanvasElement;
    const last = doc.lastResult;
    if (last) {
      result.width = last.w;
      result.height = last.h;
      const rctx = result.getContext("2d");
      if (rctx) {
        const out = new Uint8ClampedArray(4 * last.w * last.h);
        for (let i = 0, j = 0; j < last.data.length; i += 4, j += 3) {
          out[i] = last.data[j];
          out[i + 1] = last.data[j + 1];
          out[i + 2] = last.data[j + 2];
          out[i + 3] = 255;
        }
        rctx.putImageData(new ImageData(out, last.w, last.h), 0, 0);
      }
    }
    ($("reimport") as HTMLButtonElement).disabled = last === null;
    ($("undo") as HTMLButtonElement).disabled = !controller.history.canUndo;
    ($("redo") as HTMLButtonElement).disabled = !controller.history.canRedo;
    ($("generate") as HTMLButtonElement).disabled = controller.busy || doc.modelId === null;
    const error = $("error-bar");
    error.style.display = controller.lastError ? "block" : "none";
    $("error-text").textContent = controller.lastError ? controller.lastError.message : "";
  };
  controller.onChange(paint);

  const canvasPoint = (ev: PointerEvent): StrokePoint => {
    const box = canvas.getBoundingClientRect();
    return {
      x: Math.floor(((ev.clientX - box.left) / box.width) * canvas.width),
      y: Math.floor(((ev.clientY - box.top) / box.height) * canvas.height),
    };
  };

  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    const p = canvasPoint(ev);
    if (state.tool === "move") {
      const doc = controller.doc;
      state.dragIndex = doc.fragments.findIndex(
        (f) => p.x >= f.rect.x && p.x < f.rect.x + f.rect.w && p.y >= f.rect.y && p.y < f.rect.y + f.rect.h,
      );
    } else {
      state.points = [p];
    }
  });

  canvas.addEventListener("pointermove", (ev) => {
    if (!canvas.hasPointerCapture(ev.pointerId)) return;
    const p = canvasPoint(ev);
    if (state.tool === "move") {
      if (state.dragIndex >= 0) controller.dragFragment(state.dragIndex, p.x, p.y);
    } else if (state.points.length > 0) {
      state.points.push(p);
    }
  });

  canvas.addEventListener("pointerup", (ev) => {
    canvas.releasePointerCapture(ev.pointerId);
    if (state.tool === "move") {
      state.dragIndex = -1;
      return;
    }
    if (state.points.length === 0) return;
    const points = state.points;
    state.points = [];
    if (state.tool === "draw" || state.tool === "erase") {
      controller.drawStroke({ points, radius: state.radius, erase: state.tool === "erase" });
    } else {
      controller.paintMask({
        points,
        radius: state.radius * 3,
        color: state.tool === "mask-erase" ? -1 : state.color,
      });
    }
  });

  for (const tool of ["draw", "erase", "mask", "mask-erase", "move"] as Tool[]) {
    $(`tool-${tool}`).addEventListener("click", () => {
      state.tool = tool;
    });
  }

  const paletteBox = $("palette");
  PALETTE.forEach((entry, i) => {
    const swatch = document.createElement("button");
    swatch.title = entry.name;
    swatch.style.background = `rgb(${entry.rgb[0]},${entry.rgb[1]},${entry.rgb[2]})`;
    swatch.className = "swatch";
    swatch.addEventListener("click", () => {
      state.color = i;
      state.tool = "mask";
    });
    paletteBox.appendChild(swatch);
  });

  const modelSelect = $("model") as HTMLSelectElement;
  modelSelect.addEventListener("change", () => {
    controller.selectModel(modelSelect.value);
    void controller.loadTemplates(modelSelect.value).then(() => {
      const strip = $("templates");
      strip.textContent = "";
      controller.templates.forEach((tpl) => {
        const button = document.createElement("button");
        button.textContent = tpl.template_id;
        button.addEventListener("click", () => controller.placeTemplate(tpl));
        strip.appendChild(button);
      });
    });
  });

  $("generate").addEventListener("click", () => {
    const tileOn = ($("tile-on") as HTMLInputElement).checked;
    const tileSize = parseInt(($("tile-size") as HTMLSelectElement).value, 10);
    void controller
      .submit(tileOn ? { tile: { tile_w: tileSize, tile_h: tileSize, overlap_w: tileSize >> 2, overlap_h: tileSize >> 2 } } : {})
      .catch(() => undefined);
  });
  $("shuffle").addEventListener("click", () => {
    void controller.shuffleSketch(4, (Math.random() * 1e9) | 0).catch(() => undefined);
  });
  $("reimport").addEventListener("click", () => controller.reimportResult());
  $("undo").addEventListener("click", () => controller.undo());
  $("redo").addEventListener("click", () => controller.redo());
  $("retry").addEventListener("click", () => {
    void controller.retry().catch(() => undefined);
  });

  void controller.loadModels().then((models) => {
    modelSelect.textContent = "";
    for (const model of models) {
      const option = document.createElement("option");
      option.value = model.model_id;
      option.textContent = `${model.model_id} (${model.genre})`;
      modelSelect.appendChild(option);
    }
    if (models.length > 0) {
      modelSelect.value = models[0].model_id;
      modelSelect.dispatchEvent(new Event("change"));
    }
  });

  paint();
  return controller;
}
