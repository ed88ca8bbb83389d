/**
 * Typed client for the generation service. This is the only module that
 * talks to the network; everything else works on documents and images.
 */

import type { TileSpec } from "./types.js";

export interface ModelInfo {
  readonly model_id: string;
  readonly genre: string;
  readonly stage1_res: number;
}

export interface TemplateInfo {
  readonly template_id: string;
  /** base64 PPM or PNG */
  readonly sketch_image: string;
}

export interface GenerateRequest {
  readonly model_id: string;
  readonly sketch: string;
  readonly mask?: string;
  readonly tile?: TileSpec;
  readonly seed?: number;
  readonly timeout_ms?: number;
}

export interface GenerateResponse {
  readonly image: string;
  readonly width: number;
  readonly height: number;
  readonly elapsed_ms: number;
}

/** Carries the service's machine-readable error code and status. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(`${status} ${code}: ${detail}`);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  listModels(): Promise<ModelInfo[]> {
    return this.request("GET", "/api/v1/models");
  }

  listTemplates(modelId: string): Promise<TemplateInfo[]> {
    return this.request("GET", `/api/v1/models/${encodeURIComponent(modelId)}/templates`);
  }

  generate(body: GenerateRequest): Promise<GenerateResponse> {
    return this.request("POST", "/api/v1/generate", body);
  }

  shuffle(sketch: string, gridN: number, seed: number): Promise<{ sketch: string }> {
    return this.request("POST", "/api/v1/shuffle", { sketch, grid_n: gridN, seed });
  }

  buildBank(
    painting: string,
    k: number,
    sizes: number[],
  ): Promise<{ bank_id: string; k_effective: number; outlier_count: number }> {
    return this.request("POST", "/api/v1/bank/build", { painting, k, sizes });
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = null;
    }
    if (!response.ok) {
      const detail = asErrorBody(parsed);
      throw new ApiError(response.status, detail.error, detail.detail);
    }
    return parsed as T;
  }
}

function asErrorBody(parsed: unknown): { error: string; detail: string } {
  if (parsed && typeof parsed === "object") {
    const record = parsed as Record<string, unknown>;
    return {
      error: typeof record.error === "string" ? record.error : "unknown_error",
      detail: typeof record.detail === "string" ? record.detail : "",
    };
  }
  return { error: "unknown_error", detail: "" };
}
