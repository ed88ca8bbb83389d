/**
 * Framework-free studio state machine: one document history, one API
 * client, one submit queue. The DOM layer subscribes to onChange and
 * re-renders; tests drive the controller directly.
 */

import { ApiClient, ApiError, type GenerateRequest, type ModelInfo, type TemplateInfo } from "./api.js";
import {
  addFragment,
  addMaskStroke,
  addStroke,
  emptyDocument,
  importResult,
  moveFragment,
  removeFragment,
  replaceWithFragment,
  setModel,
  setResult,
} from "./document.js";
import { flatten, payloadHash } from "./flatten.js";
import { History } from "./history.js";
import { decodePpm, fromBase64, rgbToGray } from "./ppm.js";
import { SubmitQueue } from "./queue.js";
import type { CanvasDocument, GrayImage, MaskStroke, Stroke, TileSpec } from "./types.js";

export interface StudioError {
  readonly status: number;
  readonly code: string;
  readonly message: string;
}

export class StudioController {
  readonly history: History<CanvasDocument>;
  private readonly queue = new SubmitQueue();
  private readonly api: ApiClient;
  private readonly listeners: (() => void)[] = [];
  private lastRequest: { seed?: number; tile?: TileSpec } | null = null;

  models: ModelInfo[] = [];
  templates: TemplateInfo[] = [];
  lastError: StudioError | null = null;

  constructor(baseUrl: string, width = 256, height = 256) {
    this.api = new ApiClient(baseUrl);
    this.history = new History(emptyDocument(width, height));
  }

  get doc(): CanvasDocument {
    return this.history.present;
  }

  get busy(): boolean {
    return this.queue.pending > 0;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private commit(next: CanvasDocument): void {
    if (next !== this.doc) {
      this.history.commit(next);
      this.notify();
    }
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  // --- document edits ----------------------------------------------------

  drawStroke(stroke: Stroke): void {
    this.commit(addStroke(this.doc, stroke));
  }

  paintMask(stroke: MaskStroke): void {
    this.commit(addMaskStroke(this.doc, stroke));
  }

  placeFragment(image: GrayImage, x: number, y: number, w?: number, h?: number): void {
    this.commit(addFragment(this.doc, image, x, y, w, h));
  }

  dragFragment(index: number, x: number, y: number): void {
    this.commit(moveFragment(this.doc, index, x, y));
  }

  deleteFragment(index: number): void {
    this.commit(removeFragment(this.doc, index));
  }

  selectModel(modelId: string): void {
    this.commit(setModel(this.doc, modelId));
  }

  reimportResult(): void {
    this.commit(importResult(this.doc));
  }

  undo(): void {
    if (this.history.undo()) this.notify();
  }

  redo(): void {
    if (this.history.redo()) this.notify();
  }

  /** Hash of what submit would send right now. */
  currentPayloadHash(): string {
    return payloadHash(flatten(this.doc));
  }

  // --- service interactions ----------------------------------------------

  async loadModels(): Promise<ModelInfo[]> {
    this.models = await this.guard(() => this.api.listModels());
    this.notify();
    return this.models;
  }

  async loadTemplates(modelId: string): Promise<TemplateInfo[]> {
    this.templates = await this.guard(() => this.api.listTemplates(modelId));
    this.notify();
    return this.templates;
  }

  /** Decode a template sketch and drop it on the canvas at the origin. */
  placeTemplate(template: TemplateInfo): void {
    const gray = rgbToGray(decodePpm(fromBase64(template.sketch_image)));
    this.placeFragment(gray, 0, 0);
  }

  /**
   * Flatten the current document and request a generation. Queued behind
   * any in-flight request; the result lands in doc.lastResult via a
   * committed edit so the whole loop is undoable.
   */
  submit(opts: { seed?: number; tile?: TileSpec; timeoutMs?: number } = {}): Promise<CanvasDocument> {
    this.lastRequest = { seed: opts.seed, tile: opts.tile };
    return this.queue.submit(async () => {
      const doc = this.doc;
      if (doc.modelId === null) {
        throw new Error("no model selected");
      }
      const payload = flatten(doc);
      const request: GenerateRequest = {
        model_id: doc.modelId,
        sketch: payload.sketch,
        mask: payload.mask,
        ...(opts.seed !== undefined ? { seed: opts.seed } : {}),
        ...(opts.tile !== undefined ? { tile: opts.tile } : {}),
        ...(opts.timeoutMs !== undefined ? { timeout_ms: opts.timeoutMs } : {}),
      };
      const response = await this.guard(() => this.api.generate(request));
      const image = decodePpm(fromBase64(response.image));
      this.commit(setResult(this.doc, image));
      return this.doc;
    });
  }

  /** Re-run the last submit after a service error. */
  retry(): Promise<CanvasDocument> {
    const last = this.lastRequest ?? {};
    return this.submit({ seed: last.seed, tile: last.tile });
  }

  /** Block-shuffle the flattened sketch server-side and reload it. */
  shuffleSketch(gridN: number, seed: number): Promise<CanvasDocument> {
    return this.queue.submit(async () => {
      const payload = flatten(this.doc);
      const response = await this.guard(() => this.api.shuffle(payload.sketch, gridN, seed));
      const gray = rgbToGray(decodePpm(fromBase64(response.sketch)));
      this.commit(replaceWithFragment(this.doc, gray));
      return this.doc;
    });
  }

  private async guard<T>(task: () => Promise<T>): Promise<T> {
    try {
      const value = await task();
      this.lastError = null;
      return value;
    } catch (err) {
      if (err instanceof ApiError) {
        this.lastError = { status: err.status, code: err.code, message: err.message };
      } else {
        this.lastError = { status: 0, code: "network_error", message: String(err) };
      }
      this.notify();
      throw err;
    }
  }
}
