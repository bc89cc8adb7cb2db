/** Typed client for the session service. The server is authoritative for all
 * state; this client never caches beyond a single response. */

export interface Suggestion {
  concept: string;
  provenance: string;
}

export interface GenerationRecord {
  generation: number;
  pool_before: string[];
  new_concepts: string[];
  concepts_used: string[];
  prompt: string;
  name: string;
  thought: string;
  image_ref: string;
  novelty_text: number;
  novelty_image: number;
  novelty_combined: number;
  removed_concepts: string[];
  provenance: string;
  status: string;
}

export interface Adoption {
  adopted: number;
  choices: number;
  rate: number;
}

export interface SessionState {
  session_id: string;
  mode: string;
  generation: number;
  generations_total: number;
  pool: string[];
  original: string[];
  expired: string[];
  history: GenerationRecord[];
  novelty_trend: number[];
  suggestions: Suggestion[];
  adoption: Adoption;
}

export interface ChoiceBody {
  proposal_index?: number;
  concept?: string;
  skip?: boolean;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parse<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    return parse<T>(response);
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    return parse<T>(response);
  }

  async health(): Promise<{ status: string }> {
    return this.get("/health");
  }

  async vocabulary(): Promise<string[]> {
    const body = await this.get<{ labels: string[] }>("/vocabulary");
    return body.labels;
  }

  async createSession(
    options: { mode?: string; generations?: number; seed?: number } = {},
  ): Promise<string> {
    const body = await this.post<{ session_id: string }>("/sessions", options);
    return body.session_id;
  }

  async state(sessionId: string): Promise<SessionState> {
    return this.get(`/sessions/${sessionId}/state`);
  }

  async submitChoice(
    sessionId: string,
    choice: ChoiceBody,
  ): Promise<{ accepted: boolean; provenance: string }> {
    return this.post(`/sessions/${sessionId}/choice`, choice);
  }

  async step(sessionId: string): Promise<GenerationRecord> {
    return this.post(`/sessions/${sessionId}/step`);
  }
}
