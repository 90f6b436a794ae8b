import type { CategoryDefinition, NextResponse, SessionInfo, SubmitResult } from "./types";

/** Everything the UI needs from the backend; mocked in tests. */
export interface ApiClient {
  openSession(annotatorId: string): Promise<SessionInfo>;
  definitions(): Promise<CategoryDefinition[]>;
  nextDiff(sessionId: string): Promise<NextResponse>;
  submitLabels(
    sessionId: string,
    diffId: string,
    categories: string[],
    noneFlag: boolean,
    comment: string | null,
  ): Promise<SubmitResult>;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `HTTP ${response.status}`;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(detail, response.status);
  }
  return (await response.json()) as T;
}

export class HttpApiClient implements ApiClient {
  constructor(private readonly base: string = "") {}

  openSession(annotatorId: string): Promise<SessionInfo> {
    const query = new URLSearchParams({ annotator_id: annotatorId });
    return fetch(`${this.base}/api/session?${query}`).then((r) => asJson<SessionInfo>(r));
  }

  definitions(): Promise<CategoryDefinition[]> {
    return fetch(`${this.base}/api/definitions`)
      .then((r) => asJson<{ categories: CategoryDefinition[] }>(r))
      .then((body) => body.categories);
  }

  nextDiff(sessionId: string): Promise<NextResponse> {
    return fetch(`${this.base}/api/session/${sessionId}/next`).then((r) => asJson<NextResponse>(r));
  }

  submitLabels(
    sessionId: string,
    diffId: string,
    categories: string[],
    noneFlag: boolean,
    comment: string | null,
  ): Promise<SubmitResult> {
    return fetch(`${this.base}/api/session/${sessionId}/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        diff_id: diffId,
        categories,
        none_flag: noneFlag,
        comment,
      }),
    }).then((r) => asJson<SubmitResult>(r));
  }
}
