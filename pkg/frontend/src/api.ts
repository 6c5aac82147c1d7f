/** Typed client for the character service HTTP API. */

export interface Catalog {
  careers: string[];
  aspirations: string[];
  traits: string[];
  skills: string[];
  emotions: string[];
  topics: string[];
  scene_types: string[];
  descriptions: Record<string, string>;
}

export interface CharacterSpec {
  career: string;
  aspiration: string;
  traits: string[];
  skills: string[];
}

export interface CharacterRecord {
  id: string;
  spec: CharacterSpec;
  summary: string;
  profile: { name: string } & Record<string, unknown>;
}

export interface SessionStatus {
  location: string;
  status: string;
  emotion: string;
  topic: string;
}

export interface SessionCreated {
  session_id: string;
  character_id: string;
  status: SessionStatus;
}

export interface Transcript {
  session_id: string;
  character_id: string;
  status: SessionStatus;
  history: { who: "user" | "agent"; text: string }[];
}

export interface MessageReply {
  reply: string;
  history_length: number;
}

export interface EvaluationReport {
  model_label: string;
  means: Record<string, number>;
  avg: number;
  n_scores: number;
}

export interface Evaluation {
  id: string;
  character_id: string;
  model_label: string;
  n_questions: number;
  status: string;
  report: EvaluationReport;
  rounded: Record<string, number>;
}

export interface CapturedRequest {
  tag: string;
  system: string;
  user: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseFor(resp: Response): Promise<never> {
  let code = "HttpError";
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body && typeof body === "object") {
      code = body.code ?? code;
      message = body.message ?? JSON.stringify(body.detail ?? body);
    }
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, init);
    if (!resp.ok) await raiseFor(resp);
    return (await resp.json()) as T;
  }

  private send<T>(path: string, body: unknown, method = "POST"): Promise<T> {
    return this.request<T>(path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getCatalog(): Promise<Catalog> {
    return this.request("/catalog");
  }

  listCharacters(): Promise<CharacterRecord[]> {
    return this.request("/characters");
  }

  getCharacter(id: string): Promise<CharacterRecord> {
    return this.request(`/characters/${id}`);
  }

  forgeCharacter(spec: CharacterSpec): Promise<CharacterRecord> {
    return this.send("/characters", spec);
  }

  createSession(
    characterId: string,
    status: Partial<SessionStatus> = {},
  ): Promise<SessionCreated> {
    return this.send("/sessions", { character_id: characterId, ...status });
  }

  sendMessage(sessionId: string, text: string): Promise<MessageReply> {
    return this.send(`/sessions/${sessionId}/messages`, { text });
  }

  /** Streaming variant; onChunk fires per received slice, returns the full reply. */
  async streamMessage(
    sessionId: string,
    text: string,
    onChunk: (chunk: string) => void,
  ): Promise<string> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, stream: true }),
    });
    if (!resp.ok) await raiseFor(resp);
    if (!resp.body) return "";
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let full = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      const chunk = decoder.decode(value, { stream: true });
      if (chunk) {
        full += chunk;
        onChunk(chunk);
      }
    }
    return full;
  }

  patchStatus(
    sessionId: string,
    patch: Partial<SessionStatus>,
  ): Promise<Transcript> {
    return this.send(`/sessions/${sessionId}/status`, patch, "PATCH");
  }

  getTranscript(sessionId: string): Promise<Transcript> {
    return this.request(`/sessions/${sessionId}/transcript`);
  }

  runEvaluation(
    characterId: string,
    nQuestions = 5,
    modelLabel = "agent",
  ): Promise<Evaluation> {
    return this.send("/evaluations", {
      character_id: characterId,
      n_questions: nQuestions,
      model_label: modelLabel,
    });
  }

  listEvaluations(): Promise<Evaluation[]> {
    return this.request("/evaluations");
  }

  debugRequests(n = 20): Promise<CapturedRequest[]> {
    return this.request(`/debug/requests?n=${n}`);
  }
}
