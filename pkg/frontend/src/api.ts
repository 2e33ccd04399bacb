/** Typed client for the suggestion service. The UI performs no
 * highlighting logic of its own: every preview comes from the server. */

export type FormatName = "code" | "bold" | "italic" | "delete" | "heading";

export interface Suggestion {
  id: string;
  format: FormatName;
  sentence: number;
  token_start: number;
  token_end: number;
  start: number; // code-point offset into the submitted body
  end: number;
  content: string;
  confidence: number;
  note: string | null;
}

export interface SuggestResponse {
  suggestions: Suggestion[];
  parser_warnings: string[];
}

export interface RenderResponse {
  markdown: string;
}

export interface ModelEntry {
  file: string;
  format: FormatName;
  file_version: number;
  seed: number;
  config: Record<string, unknown>;
}

export interface ModelsResponse {
  models: ModelEntry[];
  warnings: { file: string; warning: string }[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function readError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { error?: string };
    if (body.error) detail = body.error;
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, payload: unknown, signal?: AbortSignal): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
      signal: signal ?? null,
    });
    if (!resp.ok) throw await readError(resp);
    return (await resp.json()) as T;
  }

  async suggest(body: string, signal?: AbortSignal): Promise<SuggestResponse> {
    return this.post<SuggestResponse>("/api/suggest", { body }, signal);
  }

  async render(body: string, acceptedIds: string[]): Promise<RenderResponse> {
    return this.post<RenderResponse>("/api/render", {
      body,
      accepted_ids: acceptedIds,
    });
  }

  async models(): Promise<ModelsResponse> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/models`);
    if (!resp.ok) throw await readError(resp);
    return (await resp.json()) as ModelsResponse;
  }

  async health(): Promise<boolean> {
    try {
      const resp = await this.fetchImpl(`${this.baseUrl}/healthz`);
      return resp.ok;
    } catch {
      return false;
    }
  }
}
