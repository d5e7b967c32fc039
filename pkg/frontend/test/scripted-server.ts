/** Scripted stand-in for the session service, mirroring its HTTP contract:
 * payload shapes, state names, status codes, error details, answer-word
 * tables, and the NDJSON transcript rows — but with a fixed question script
 * instead of a live learner.
 *
 * Bookkeeping mirrors the real session loop: the first proposal of a session
 * is auto-accepted without being surfaced (transcript row 1), surfaced
 * questions are numbered from 1, "too hard" consumes a question but records
 * no preference, "stop" ends the session with the current running best.
 */

import type { BreakdownEntry, QueryKind } from "../src/types";

export interface RawCandidate {
  id: string;
  metrics: number[];
  params?: number[];
}

export interface ScriptQuestion {
  kind: QueryKind;
  /** [left, right] for compare; [challenger, incumbent] for propose. */
  candidates: [RawCandidate, RawCandidate];
  /** Committee members a constraining answer eliminates. */
  prunes?: number;
}

export interface ServerScript {
  scenario: string;
  /** Auto-accepted first proposal (becomes the initial running best). */
  initial: RawCandidate;
  questions: ScriptQuestion[];
  imageStart?: number;
  breakdown: (metrics: number[]) => BreakdownEntry[];
}

const COMPARE_CHOICES: Record<string, string> = {
  left: "left_better",
  right: "right_better",
  equal: "equal",
  too_hard: "abstain",
  stop: "stop",
};
const PROPOSE_CHOICES: Record<string, string> = {
  accept: "accept",
  reject: "reject",
  too_hard: "abstain",
  stop: "stop",
};
const ALL_CHOICES = ["accept", "equal", "left", "reject", "right", "stop", "too_hard"];

const STATUS_TEXT: Record<number, string> = {
  200: "OK",
  404: "Not Found",
  409: "Conflict",
  410: "Gone",
  422: "Unprocessable Entity",
};

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    statusText: STATUS_TEXT[status] ?? "",
    headers: { "content-type": "application/json" },
  });
}

function error(status: number, detail: string): Response {
  return json(status, { detail });
}

function sortKeys(v: unknown): unknown {
  if (Array.isArray(v)) return v.map(sortKeys);
  if (v !== null && typeof v === "object") {
    return Object.fromEntries(
      Object.entries(v as Record<string, unknown>)
        .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
        .map(([k, val]) => [k, sortKeys(val)]),
    );
  }
  return v;
}

interface TranscriptRow {
  iter: number;
  query: {
    kind: QueryKind;
    left: { id: string; metrics: number[] };
    right: { id: string; metrics: number[] } | null;
    info: number;
  };
  response: string;
  image_before: number;
  image_after: number;
  r_best_metrics: number[];
  note?: string;
}

class Session {
  nonce: string | null;
  nQuery: number;
  answeredSeq = 0;
  questionIdx = 0;
  count = 1;
  image: number;
  rBest: RawCandidate;
  finished = false;
  stopReason: string | null = null;
  expired = false;
  rows: TranscriptRow[] = [];

  constructor(
    readonly sid: string,
    readonly script: ServerScript,
    nonce: string | null,
    nQuery: number,
  ) {
    this.nonce = nonce;
    this.nQuery = nQuery;
    this.image = script.imageStart ?? 4;
    this.rBest = script.initial;
    this.rows.push({
      iter: 1,
      query: {
        kind: "propose",
        left: { id: script.initial.id, metrics: [...script.initial.metrics] },
        right: null,
        info: 0,
      },
      response: "accept",
      image_before: 0,
      image_after: 0,
      r_best_metrics: [...script.initial.metrics],
    });
  }

  get pendingSeq(): number | null {
    if (this.finished || this.questionIdx >= this.script.questions.length) return null;
    return this.questionIdx + 1;
  }

  get pendingQuestion(): ScriptQuestion | null {
    const seq = this.pendingSeq;
    return seq === null ? null : this.script.questions[this.questionIdx]!;
  }

  queryDict(q: ScriptQuestion): TranscriptRow["query"] {
    const [first, second] = q.candidates;
    return {
      kind: q.kind,
      left: { id: first.id, metrics: [...first.metrics] },
      right:
        q.kind === "compare" ? { id: second.id, metrics: [...second.metrics] } : null,
      info: 0,
    };
  }
}

export interface LoggedRequest {
  method: string;
  path: string;
  body?: unknown;
}

export class ScriptedServer {
  sessions = new Map<string, Session>();
  log: LoggedRequest[] = [];
  answerLog: { sid: string; seq: number; choice: string }[] = [];
  /** The exact payload most recently served by GET .../query. */
  lastQueryPayload: unknown = null;
  private counter = 0;
  private failQueue = 0;

  constructor(readonly script: ServerScript) {}

  /** Makes the next `n` fetches fail like a dropped network. */
  failNextRequests(n: number): void {
    this.failQueue += n;
  }

  expire(sid: string): void {
    const s = this.sessions.get(sid);
    if (s) s.expired = true;
  }

  session(sid: string): Session {
    const s = this.sessions.get(sid);
    if (!s) throw new Error(`no such scripted session: ${sid}`);
    return s;
  }

  transcriptText(sid: string): string {
    return this.session(sid)
      .rows.map((r) => JSON.stringify(sortKeys(r)))
      .join("\n");
  }

  fetchImpl = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    if (this.failQueue > 0) {
      this.failQueue -= 1;
      throw new TypeError("fetch failed");
    }
    const href =
      typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const url = new URL(href, "http://scripted.test");
    const method = (init?.method ?? "GET").toUpperCase();
    let body: unknown;
    if (init?.body) body = JSON.parse(String(init.body));
    this.log.push({ method, path: url.pathname + url.search, body });
    return this.route(method, url, body);
  };

  private route(method: string, url: URL, body: unknown): Response {
    const parts = url.pathname.split("/").filter(Boolean);
    if (parts[0] !== "api" || parts[1] !== "sessions") return error(404, "Not Found");

    if (parts.length === 2 && method === "POST") return this.create(body);

    const sid = parts[2] ?? "";
    const leaf = parts[3] ?? "";
    const live = this.sessions.get(sid);
    if (!live) return error(404, "unknown session");
    if (live.expired) return error(410, "session expired");

    if (leaf === "answer" && method === "POST") return this.answer(live, body);

    const nonce = url.searchParams.get("nonce");
    if (live.nonce !== null && nonce !== live.nonce) {
      return error(409, "session is bound to another client");
    }
    if (leaf === "query" && method === "GET") return this.query(live);
    if (leaf === "recommendation" && method === "GET") return this.recommendation(live);
    if (leaf === "transcript" && method === "GET") return this.transcript(live);
    return error(404, "Not Found");
  }

  private create(body: unknown): Response {
    const opts = (body ?? {}) as { n_query?: number; nonce?: string };
    const nQuery = opts.n_query ?? 10;
    if (!(nQuery >= 1 && nQuery <= 100)) return error(422, "n_query must be in [1, 100]");
    this.counter += 1;
    const sid = this.counter.toString(16).padStart(32, "0");
    const live = new Session(sid, this.script, opts.nonce ?? null, nQuery);
    this.sessions.set(sid, live);
    return json(200, { id: sid, scenario: this.script.scenario, n_query: nQuery });
  }

  private query(live: Session): Response {
    const q = live.pendingQuestion;
    if (live.finished || q === null) {
      const payload = { state: "Finished", stop_reason: live.stopReason };
      this.lastQueryPayload = payload;
      return json(200, payload);
    }
    const roles =
      q.kind === "compare" ? ["left", "right"] : ["challenger", "incumbent"];
    const payload = {
      state: "AwaitingAnswer",
      kind: q.kind,
      iteration: live.pendingSeq,
      expected_total: live.nQuery,
      can_stop: true,
      candidates: q.candidates.map((c, i) => ({
        id: c.id,
        metrics: [...c.metrics],
        breakdown: this.script.breakdown(c.metrics),
        role: roles[i],
      })),
    };
    this.lastQueryPayload = payload;
    return json(200, payload);
  }

  private answer(live: Session, body: unknown): Response {
    const req = (body ?? {}) as { choice?: string; question?: number; nonce?: string };
    if (live.nonce !== null && req.nonce !== live.nonce) {
      return error(409, "session is bound to another client");
    }
    if (!req.choice || !ALL_CHOICES.includes(req.choice)) {
      return error(422, `choice must be one of [${ALL_CHOICES.map((c) => `'${c}'`).join(", ")}]`);
    }
    const seq = live.pendingSeq;
    const q = live.pendingQuestion;
    if (seq === null || q === null || seq <= live.answeredSeq) {
      return error(409, "no question is awaiting an answer");
    }
    if (req.question !== undefined && Number(req.question) !== seq) {
      return error(409, "that question has already been answered");
    }
    const table = q.kind === "compare" ? COMPARE_CHOICES : PROPOSE_CHOICES;
    const response = table[req.choice];
    if (response === undefined) {
      return error(409, `'${req.choice}' is not a valid answer to a ${q.kind} question`);
    }
    live.answeredSeq = seq;
    this.answerLog.push({ sid: live.sid, seq, choice: req.choice });

    if (response === "stop") {
      live.rows.push({
        iter: live.count,
        query: live.queryDict(q),
        response: "stop",
        image_before: live.image,
        image_after: live.image,
        r_best_metrics: [...live.rBest.metrics],
        note: "stopped by teacher",
      });
      live.finished = true;
      live.stopReason = "stop";
      return json(200, { state: "Finished", answered: seq, stop_reason: "stop" });
    }

    live.count += 1;
    const imageBefore = live.image;
    if (response !== "abstain") {
      live.image = Math.max(0, live.image - (q.prunes ?? 1));
      if (q.kind === "propose" && response === "accept") {
        live.rBest = q.candidates[0];
      }
    }
    live.rows.push({
      iter: live.count,
      query: live.queryDict(q),
      response,
      image_before: imageBefore,
      image_after: live.image,
      r_best_metrics: [...live.rBest.metrics],
    });
    live.questionIdx += 1;
    if (live.questionIdx >= live.script.questions.length) {
      live.finished = true;
      live.stopReason = "guard";
    }
    const out: Record<string, unknown> = {
      state: live.finished ? "Finished" : "AwaitingAnswer",
      answered: seq,
    };
    if (live.finished) out.stop_reason = live.stopReason;
    return json(200, out);
  }

  private recommendation(live: Session): Response {
    if (!live.finished) return error(409, "session is still running");
    return json(200, {
      recommendation: {
        id: live.rBest.id,
        metrics: [...live.rBest.metrics],
        breakdown: this.script.breakdown(live.rBest.metrics),
      },
      allocation: [...(live.rBest.params ?? [])],
      stop_reason: live.stopReason,
      queries: live.count,
      transcript: `/api/sessions/${live.sid}/transcript`,
    });
  }

  private transcript(live: Session): Response {
    if (!live.finished) return error(409, "session is still running");
    return new Response(this.transcriptText(live.sid), {
      status: 200,
      statusText: "OK",
      headers: { "content-type": "application/x-ndjson" },
    });
  }
}
