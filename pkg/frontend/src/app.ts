/** Session controller: create → loop(fetch question → render → post answer)
 * → recommendation screen.
 *
 * The session is the only state. Exactly one answer can leave the client per
 * pending question: the first click sets a synchronous lockout flag and
 * disables every answer button before anything awaits, so a double click or
 * a race between two buttons sends a single POST.
 */

import { ApiClient, HttpError } from "./api";
import type {
  AwaitingPayload,
  Choice,
  HistoryEntry,
  QueryResponse,
  Recommendation,
} from "./types";
import {
  offerDownload,
  renderQuery,
  renderRecommendation,
  renderShell,
  renderTerminal,
  renderThinking,
  toast,
} from "./ui";

export interface AppOptions {
  root: HTMLElement;
  baseUrl?: string;
  nQuery?: number;
  seed?: number;
  /** Server-side long-poll horizon for the query endpoint, seconds. */
  pollWait?: number;
  /** Client-side pause between polls that came back "Thinking", ms. */
  pollDelayMs?: number;
  /** Network retry count for a single request. */
  retries?: number;
  /** First retry backoff, ms (doubles per attempt). */
  retryBaseMs?: number;
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export type AppState = "idle" | "awaiting" | "thinking" | "finished" | "terminal";

export class App {
  api: ApiClient;
  state: AppState = "idle";
  history: HistoryEntry[] = [];
  /** Count of preference constraints gathered; "too hard" never shrinks or
   * grows it. */
  constraints = 0;
  lastTranscript: string | null = null;
  pending: Promise<unknown> | null = null;

  private readonly root: HTMLElement;
  private main!: HTMLElement;
  private status!: HTMLElement;
  private toasts!: HTMLElement;
  private readonly opts: Required<Pick<AppOptions, "pollWait" | "pollDelayMs">> &
    AppOptions;
  private answering = false;
  private currentQuestion: AwaitingPayload | null = null;

  constructor(options: AppOptions) {
    this.opts = { pollWait: 5, pollDelayMs: 150, ...options };
    this.root = options.root;
    this.api = this.makeClient();
  }

  private makeClient(): ApiClient {
    return new ApiClient(this.opts.baseUrl ?? "", {
      retries: this.opts.retries,
      baseDelayMs: this.opts.retryBaseMs,
      onRetry: () => this.note("Connection lost — retrying…", "info"),
    });
  }

  private note(message: string, kind: "info" | "error" = "error"): void {
    toast(this.toasts, message, kind);
  }

  private track<T>(task: Promise<T>): Promise<T> {
    const p = task.finally(() => {
      if (this.pending === p) this.pending = null;
    });
    this.pending = p;
    return p;
  }

  /** Awaits every in-flight transition; test helper and navigation guard. */
  async settle(): Promise<void> {
    while (this.pending) {
      await this.pending.catch(() => {});
    }
  }

  async start(): Promise<void> {
    ({ main: this.main, status: this.status, toasts: this.toasts } = renderShell(this.root));
    this.status.textContent = "connecting…";
    await this.track(this.createAndLoop());
  }

  private async createAndLoop(): Promise<void> {
    let created;
    try {
      created = await this.api.createSession({
        ...(this.opts.nQuery !== undefined ? { n_query: this.opts.nQuery } : {}),
        ...(this.opts.seed !== undefined ? { seed: this.opts.seed } : {}),
      });
    } catch (err) {
      this.state = "terminal";
      renderTerminal(this.main, "Could not reach the session service.");
      this.note(describeError(err));
      return;
    }
    this.status.textContent = `session ${created.id.slice(0, 8)} · ${created.scenario}`;
    await this.loop();
  }

  private async loop(): Promise<void> {
    for (;;) {
      let q: QueryResponse;
      try {
        q = await this.api.getQuery(this.opts.pollWait);
      } catch (err) {
        this.handleTerminalError(err);
        return;
      }
      if (q.state === "Thinking") {
        if (this.state !== "thinking") {
          this.state = "thinking";
          renderThinking(this.main);
        }
        await sleep(this.opts.pollDelayMs);
        continue;
      }
      if (q.state === "Finished") {
        if (q.error) {
          this.state = "terminal";
          renderTerminal(this.main, `The session failed: ${q.error}`);
          return;
        }
        await this.finish();
        return;
      }
      this.showQuestion(q);
      return;
    }
  }

  private showQuestion(q: AwaitingPayload): void {
    this.state = "awaiting";
    this.currentQuestion = q;
    this.answering = false;
    const buttons = renderQuery(this.main, q, this.constraints, {
      onChoice: (choice) => this.handleChoice(q, buttons, choice),
    });
  }

  private handleChoice(
    q: AwaitingPayload,
    buttons: HTMLButtonElement[],
    choice: Choice,
  ): void {
    // Lockout: everything here is synchronous. A second click — same button
    // or a different one — finds the flag already set and does nothing.
    if (this.answering || this.currentQuestion?.iteration !== q.iteration) return;
    this.answering = true;
    for (const b of buttons) b.disabled = true;
    void this.track(this.postAndContinue(q, choice));
  }

  private async postAndContinue(q: AwaitingPayload, choice: Choice): Promise<void> {
    this.currentQuestion = null;
    try {
      await this.api.postAnswer(choice, q.iteration);
    } catch (err) {
      if (err instanceof HttpError && err.status === 409) {
        // The question moved on without us (stale tab, double-send that
        // slipped past the lockout, wrong-kind choice). Surface it and
        // resynchronize with whatever the server now has pending.
        this.note(err.detail);
        await this.loop();
        return;
      }
      this.handleTerminalError(err);
      return;
    }
    this.history.push({
      iteration: q.iteration,
      kind: q.kind,
      choice,
      constraining: choice !== "too_hard" && choice !== "stop",
    });
    if (choice !== "too_hard" && choice !== "stop") this.constraints += 1;
    await this.loop();
  }

  private async finish(): Promise<void> {
    let rec: Recommendation;
    try {
      rec = await this.api.getRecommendation();
    } catch (err) {
      this.handleTerminalError(err);
      return;
    }
    this.state = "finished";
    renderRecommendation(this.main, rec, this.history, {
      onDownload: () => void this.track(this.downloadTranscript()),
      onRestart: () => void this.track(this.restart()),
    });
  }

  /** Fetches the NDJSON transcript and offers it as a file download. */
  async downloadTranscript(): Promise<string> {
    const text = await this.api.getTranscript();
    this.lastTranscript = text;
    const sid = this.api.sessionId ?? "session";
    offerDownload(this.main, `session-${sid.slice(0, 8)}.ndjson`, text);
    return text;
  }

  private async restart(): Promise<void> {
    this.api = this.makeClient();
    this.history = [];
    this.constraints = 0;
    this.lastTranscript = null;
    this.currentQuestion = null;
    this.state = "idle";
    await this.createAndLoop();
  }

  private handleTerminalError(err: unknown): void {
    this.state = "terminal";
    if (err instanceof HttpError && err.status === 410) {
      this.note("This session has expired.");
      renderTerminal(this.main, "Session expired — start a new one to continue.");
      return;
    }
    if (err instanceof HttpError && err.status === 404) {
      this.note("Unknown session.");
      renderTerminal(this.main, "This session does not exist on the server.");
      return;
    }
    if (err instanceof HttpError && err.status === 409) {
      this.note(err.detail);
      renderTerminal(this.main, describeError(err));
      return;
    }
    this.note(describeError(err));
    renderTerminal(this.main, "Lost contact with the session service.");
  }
}

function describeError(err: unknown): string {
  if (err instanceof HttpError) return err.detail;
  if (err instanceof Error) return err.message;
  return String(err);
}
