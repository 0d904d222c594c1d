// Typed client for the face generation service. The browser never derives
// latents or attributes itself; everything shown comes from these responses.

export interface EmbedderInfo {
  name: string;
  dimension: number;
  deterministic: boolean;
}

export interface HealthResponse {
  status: string;
  model: string;
  embedder: EmbedderInfo;
}

export interface AttributeValue {
  level: number;
  label: string;
}

export interface GenerationResult {
  latent_id: string;
  latent: number[];
  image_png_b64: string;
  attributes: Record<string, AttributeValue> | null;
  match: number | null;
}

export interface LexiconEntry {
  phrase: string;
  targets: [string, string][];
}

export interface LexiconChannel {
  name: string;
  levels: string[];
}

export interface Lexicon {
  version: number;
  channels: LexiconChannel[];
  entries: LexiconEntry[];
}

export interface SessionStep {
  index: number;
  text: string;
  alpha: number;
  base: number[];
  k: number;
  sigma: number;
  noise_seed: number;
  variants: number[][];
  selected: number | null;
  timestamp: number;
  base_image?: GenerationResult;
  variant_images?: GenerationResult[];
}

export interface SessionState {
  session_id: string;
  created_at: number;
  status: "active" | "closed";
  steps: SessionStep[];
}

export interface StepRequest {
  text: string;
  alpha?: number;
  k?: number;
  sigma?: number;
  noise_seed?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface FacegenApi {
  health(): Promise<HealthResponse>;
  lexicon(): Promise<Lexicon>;
  generate(text: string): Promise<GenerationResult>;
  createSession(): Promise<{ session_id: string }>;
  session(id: string): Promise<SessionState>;
  addStep(id: string, step: StepRequest): Promise<SessionStep & { session_id: string }>;
  selectVariant(id: string, stepIndex: number, variantIndex: number): Promise<unknown>;
  closeSession(id: string): Promise<unknown>;
}

async function request<T>(base: string, method: string, path: string, body?: unknown): Promise<T> {
  const response = await fetch(base + path, {
    method,
    headers: body === undefined ? undefined : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const payload = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, payload.error ?? "unknown", payload.message ?? response.statusText);
  }
  return payload as T;
}

export class FacegenClient implements FacegenApi {
  constructor(private base: string = "") {}

  health(): Promise<HealthResponse> {
    return request(this.base, "GET", "/api/health");
  }

  lexicon(): Promise<Lexicon> {
    return request(this.base, "GET", "/api/lexicon");
  }

  generate(text: string): Promise<GenerationResult> {
    return request(this.base, "POST", "/api/generate", { text });
  }

  createSession(): Promise<{ session_id: string }> {
    return request(this.base, "POST", "/api/sessions");
  }

  session(id: string): Promise<SessionState> {
    return request(this.base, "GET", `/api/sessions/${id}`);
  }

  addStep(id: string, step: StepRequest): Promise<SessionStep & { session_id: string }> {
    return request(this.base, "POST", `/api/sessions/${id}/steps`, step);
  }

  selectVariant(id: string, stepIndex: number, variantIndex: number): Promise<unknown> {
    return request(this.base, "POST", `/api/sessions/${id}/steps/${stepIndex}/select`, {
      variant_index: variantIndex,
    });
  }

  closeSession(id: string): Promise<unknown> {
    return request(this.base, "POST", `/api/sessions/${id}/close`);
  }
}

export function pngDataUrl(b64: string): string {
  return `data:image/png;base64,${b64}`;
}
