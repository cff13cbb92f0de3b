/**
 * Typed client for the alignment session HTTP API.
 *
 * Every mutation carries the version the client last saw; the server
 * answers 409 when that version is stale and the client must re-fetch.
 */

export type LanguageCode = "bam" | "fr" | "en";
export type Direction = "next" | "prev";
export type UnitKind = "BFE" | "BF" | "BE";

export interface WindowItem {
  index: number;
  text: string;
}

export interface StreamWindow {
  cursor: number;
  total: number;
  items: WindowItem[];
}

export interface SessionState {
  id: string;
  version: number;
  cursors: Record<LanguageCode, number>;
  totals: Record<LanguageCode, number>;
  aligned_count: number;
  saved_count: number;
  output_path: string | null;
  window: Record<LanguageCode, StreamWindow>;
}

export interface SaveOptions {
  path?: string;
  overwrite?: boolean;
}

/** Error carrying the HTTP status and the server's diagnostic message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

/** The method surface the UI depends on; AlignApi is the real transport. */
export interface AlignClient {
  createSession(
    streams: Record<string, string[]>,
    outputPath?: string,
  ): Promise<SessionState>;
  getSession(sessionId: string): Promise<SessionState>;
  advance(
    sessionId: string,
    version: number,
    language: LanguageCode | "all",
    direction: Direction,
  ): Promise<SessionState>;
  align(sessionId: string, version: number, kind: UnitKind): Promise<SessionState>;
  save(
    sessionId: string,
    version: number,
    options?: SaveOptions,
  ): Promise<SessionState>;
  continueSave(sessionId: string, version: number): Promise<SessionState>;
  exportTsv(sessionId: string): Promise<string>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AlignApi implements AlignClient {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl = "",
    fetchFn?: FetchLike,
  ) {
    // wrap lazily so the global fetch keeps its expected receiver
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body.detail === "string") {
          detail = body.detail;
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  private async requestJson(path: string, body?: unknown): Promise<SessionState> {
    const init: RequestInit =
      body === undefined
        ? {}
        : {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
          };
    const response = await this.request(path, init);
    return (await response.json()) as SessionState;
  }

  createSession(
    streams: Record<string, string[]>,
    outputPath?: string,
  ): Promise<SessionState> {
    const body: Record<string, unknown> = { streams };
    if (outputPath !== undefined) {
      body.output_path = outputPath;
    }
    return this.requestJson("/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.requestJson(`/sessions/${sessionId}`);
  }

  advance(
    sessionId: string,
    version: number,
    language: LanguageCode | "all",
    direction: Direction,
  ): Promise<SessionState> {
    return this.requestJson(`/sessions/${sessionId}/advance`, {
      version,
      language,
      direction,
    });
  }

  align(sessionId: string, version: number, kind: UnitKind): Promise<SessionState> {
    return this.requestJson(`/sessions/${sessionId}/align`, { version, kind });
  }

  save(
    sessionId: string,
    version: number,
    options: SaveOptions = {},
  ): Promise<SessionState> {
    const body: Record<string, unknown> = { version };
    if (options.path !== undefined) {
      body.path = options.path;
    }
    if (options.overwrite !== undefined) {
      body.overwrite = options.overwrite;
    }
    return this.requestJson(`/sessions/${sessionId}/save`, body);
  }

  continueSave(sessionId: string, version: number): Promise<SessionState> {
    return this.requestJson(`/sessions/${sessionId}/continue-save`, { version });
  }

  async exportTsv(sessionId: string): Promise<string> {
    const response = await this.request(`/sessions/${sessionId}/export`);
    return response.text();
  }
}
