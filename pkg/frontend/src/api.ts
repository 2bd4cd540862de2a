// Typed fetch client for the curation service.

import type {
  ApiErrorBody,
  LabelSubmission,
  PendingBatch,
  Progress,
  SelectionRecord,
  SessionInfo,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public body: ApiErrorBody,
  ) {
    super(body.message || `request failed with ${status}`);
  }

  get code(): string {
    return this.body.code;
  }
}

async function parse<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { code: "http_error", message: response.statusText };
  }
  throw new ApiRequestError(response.status, body);
}

export class ApiClient {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async createSession(overrides: object = {}): Promise<SessionInfo> {
    const response = await fetch(this.url("/api/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(overrides),
    });
    return parse<SessionInfo>(response);
  }

  async getBatch(sessionId: string): Promise<PendingBatch> {
    const response = await fetch(this.url(`/api/sessions/${sessionId}/batch`));
    return parse<PendingBatch>(response);
  }

  async submitLabels(
    sessionId: string,
    labels: LabelSubmission[],
  ): Promise<{ labeled: number; step: number; status: string }> {
    const response = await fetch(this.url(`/api/sessions/${sessionId}/labels`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ labels }),
    });
    return parse(response);
  }

  async getProgress(sessionId: string): Promise<Progress> {
    const response = await fetch(
      this.url(`/api/sessions/${sessionId}/progress`),
    );
    return parse<Progress>(response);
  }

  async getLog(sessionId: string): Promise<SelectionRecord[]> {
    const response = await fetch(this.url(`/api/sessions/${sessionId}/log`));
    const body = await parse<{ records: SelectionRecord[] }>(response);
    return body.records;
  }

  imageUrl(imageId: string): string {
    return this.url(`/api/images/${imageId}`);
  }
}
