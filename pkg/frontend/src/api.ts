/** Plain-fetch client for the session HTTP API.
 *
 * Network failures (offline, connection reset) are retried with exponential
 * backoff; HTTP error statuses are never retried — they are the server
 * speaking (404/409/410/422) and the caller decides what they mean.
 */

import type {
  AnswerResponse,
  Choice,
  CreateResponse,
  QueryResponse,
  Recommendation,
} from "./types";

export class HttpError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "HttpError";
  }
}

export interface RetryOptions {
  /** Retries after a network failure (not counting the first attempt). */
  retries?: number;
  /** First backoff delay; doubles per retry. */
  baseDelayMs?: number;
  /** Called before each backoff sleep, e.g. to surface a "reconnecting" note. */
  onRetry?: (attempt: number, delayMs: number) => void;
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

async function request(
  url: string,
  init: RequestInit | undefined,
  retry: RetryOptions,
): Promise<Response> {
  const retries = retry.retries ?? 4;
  const base = retry.baseDelayMs ?? 250;
  for (let attempt = 0; ; attempt++) {
    let resp: Response;
    try {
      resp = await fetch(url, init);
    } catch (err) {
      if (attempt >= retries) throw err;
      const delay = base * 2 ** attempt;
      retry.onRetry?.(attempt + 1, delay);
      await sleep(delay);
      continue;
    }
    if (!resp.ok) {
      let detail = resp.statusText || `status ${resp.status}`;
      try {
        const body: unknown = await resp.json();
        if (
          typeof body === "object" &&
          body !== null &&
          "detail" in body &&
          typeof (body as { detail: unknown }).detail === "string"
        ) {
          detail = (body as { detail: string }).detail;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new HttpError(resp.status, detail);
    }
    return resp;
  }
}

function makeNonce(): string {
  const bytes = new Uint8Array(16);
  crypto.getRandomValues(bytes);
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

/** One client = one session = one nonce. A second tab would mint its own
 * nonce and be rejected by the server with 409. */
export class ApiClient {
  readonly nonce: string;
  sessionId: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly retry: RetryOptions = {},
    nonce?: string,
  ) {
    this.nonce = nonce ?? makeNonce();
  }

  private path(suffix: string): string {
    if (this.sessionId === null) throw new Error("no session yet");
    return `${this.baseUrl}/api/sessions/${this.sessionId}${suffix}`;
  }

  private async getJson<T>(url: string): Promise<T> {
    const resp = await request(url, undefined, this.retry);
    return (await resp.json()) as T;
  }

  private async postJson<T>(url: string, body: unknown): Promise<T> {
    const resp = await request(
      url,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      },
      this.retry,
    );
    return (await resp.json()) as T;
  }

  async createSession(
    opts: { n_query?: number; seed?: number } = {},
  ): Promise<CreateResponse> {
    const out = await this.postJson<CreateResponse>(`${this.baseUrl}/api/sessions`, {
      ...opts,
      nonce: this.nonce,
    });
    this.sessionId = out.id;
    return out;
  }

  /** Long-polls the pending question; `wait` is how long the server may hold
   * the request while the learner is thinking. */
  getQuery(wait = 5): Promise<QueryResponse> {
    return this.getJson(this.path(`/query?wait=${wait}&nonce=${this.nonce}`));
  }

  /** Posts one answer. `question` pins the answer to the question number it
   * was given for, so a stale tab or a double-send is rejected with 409
   * instead of answering the wrong question. */
  postAnswer(choice: Choice, question: number): Promise<AnswerResponse> {
    return this.postJson(this.path("/answer"), {
      choice,
      question,
      nonce: this.nonce,
    });
  }

  getRecommendation(): Promise<Recommendation> {
    return this.getJson(this.path(`/recommendation?nonce=${this.nonce}`));
  }

  /** Raw NDJSON transcript, exactly as the server stores it. */
  async getTranscript(): Promise<string> {
    const resp = await request(
      this.path(`/transcript?nonce=${this.nonce}`),
      undefined,
      this.retry,
    );
    return await resp.text();
  }
}
