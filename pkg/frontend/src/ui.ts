/** DOM rendering for the session screens.
 *
 * Everything is plain createElement — the session is the only state, held by
 * the controller in app.ts. Exact metric values from the API payload are
 * stamped into data-value attributes; the visible text is the same value at
 * one decimal place and nothing else.
 */

import { betterThan, fmt1, fmtDelta } from "./format";
import type {
  AwaitingPayload,
  CandidateCard,
  Choice,
  FinalCandidate,
  HistoryEntry,
  QueryKind,
  Recommendation,
  Role,
} from "./types";

type Attrs = Record<string, string>;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

const ROLE_TITLES: Record<Role, string> = {
  left: "Left option",
  right: "Right option",
  challenger: "Challenger",
  incumbent: "Current best",
};

const CHOICE_LABELS: Record<Choice, string> = {
  left: "Left is better",
  right: "Right is better",
  equal: "They're equal",
  accept: "Accept challenger",
  reject: "Keep current best",
  too_hard: "Too hard to call",
  stop: "Stop and recommend",
};

const STOP_REASON_TEXT: Record<string, string> = {
  guard: "question budget reached",
  exhausted: "no further designs to ask about",
  stop: "stopped at your request",
  cap: "query cap reached",
  all_unsatisfiable: "answers ruled out every remaining objective",
  disconnected: "connection to the session was lost",
};

export function describeStopReason(reason: string | null): string {
  if (!reason) return "session ended";
  return STOP_REASON_TEXT[reason] ?? reason;
}

/** Static page chrome; returns the slots the controller fills in. */
export function renderShell(root: HTMLElement): {
  main: HTMLElement;
  status: HTMLElement;
  toasts: HTMLElement;
} {
  root.textContent = "";
  const status = el("div", { id: "status", class: "status" });
  const header = el(
    "header",
    { class: "page-header" },
    el("h1", {}, "Network design preferences"),
    status,
  );
  const main = el("main", { id: "main" });
  const toasts = el("div", { id: "toasts", class: "toasts", "aria-live": "polite" });
  root.append(header, main, toasts);
  return { main, status, toasts };
}

export function toast(container: HTMLElement, message: string, kind: "info" | "error" = "error"): void {
  const note = el("div", { class: `toast toast-${kind}`, role: "alert" }, message);
  container.append(note);
  setTimeout(() => note.remove(), 6000);
}

export function renderThinking(main: HTMLElement): void {
  main.textContent = "";
  main.append(
    el(
      "div",
      { class: "thinking", id: "thinking" },
      el("div", { class: "spinner", "aria-hidden": "true" }),
      el("p", {}, "Working out the next question…"),
    ),
  );
}

export function renderTerminal(main: HTMLElement, message: string): void {
  main.textContent = "";
  main.append(el("div", { class: "terminal-note", id: "terminal" }, message));
}

/** One metric row: label, proportional bar, exact value in data-value, text
 * at one decimal. `span` is the largest |value| for this row's label across
 * both cards, so the two bars are directly comparable. */
function metricRow(
  entry: { label: string; value: number; unit: string; higher_better: boolean },
  span: number,
): HTMLElement {
  const pct = span > 0 ? (Math.abs(entry.value) / span) * 100 : 0;
  const bar = el("div", { class: "bar-track", "aria-hidden": "true" });
  const fill = el("div", {
    class: `bar-fill ${entry.higher_better ? "bar-benefit" : "bar-cost"}`,
    style: `width: ${pct.toFixed(2)}%`,
  });
  bar.append(fill);
  const valueText = entry.unit ? `${fmt1(entry.value)} ${entry.unit}` : fmt1(entry.value);
  return el(
    "li",
    { class: "metric-row", "data-label": entry.label, "data-value": String(entry.value) },
    el("span", { class: "metric-label" }, entry.label),
    bar,
    el("span", { class: "metric-value", title: String(entry.value) }, valueText),
  );
}

function deltaRow(
  entry: { label: string; value: number; unit: string; higher_better: boolean },
  other: number,
): HTMLElement {
  const cmp = betterThan(entry.value, other, entry.higher_better);
  const cls = cmp > 0 ? "delta-better" : cmp < 0 ? "delta-worse" : "delta-even";
  const text = entry.unit
    ? `${fmtDelta(entry.value, other)} ${entry.unit}`
    : fmtDelta(entry.value, other);
  return el(
    "li",
    { class: `delta-row ${cls}`, "data-label": entry.label },
    el("span", { class: "metric-label" }, entry.label),
    el("span", { class: "delta-value" }, `${text} vs other`),
  );
}

function candidateCardEl(c: CandidateCard, other: CandidateCard): HTMLElement {
  const spans = c.breakdown.map((entry, i) =>
    Math.max(Math.abs(entry.value), Math.abs(other.breakdown[i]?.value ?? 0)),
  );
  const bars = el("ul", { class: "metric-list" });
  c.breakdown.forEach((entry, i) => bars.append(metricRow(entry, spans[i] ?? 0)));
  const deltas = el("ul", { class: "delta-list" });
  c.breakdown.forEach((entry, i) => {
    const counterpart = other.breakdown[i];
    if (counterpart) deltas.append(deltaRow(entry, counterpart.value));
  });
  return el(
    "section",
    {
      class: `card card-${c.role}`,
      "data-role": c.role,
      "data-candidate-id": c.id,
      "data-metrics": JSON.stringify(c.metrics),
    },
    el("h2", { class: "card-title" }, ROLE_TITLES[c.role]),
    bars,
    deltas,
  );
}

const QUESTION_TEXT: Record<QueryKind, string> = {
  compare: "Which design do you prefer?",
  propose: "Should the challenger replace your current best?",
};

const CHOICES_BY_KIND: Record<QueryKind, Choice[]> = {
  compare: ["left", "right", "equal", "too_hard"],
  propose: ["accept", "reject", "too_hard"],
};

export interface QueryHandlers {
  onChoice: (choice: Choice) => void;
}

/** Renders one pending question; returns the answer buttons so the caller
 * can lock them out after the first click. */
export function renderQuery(
  main: HTMLElement,
  q: AwaitingPayload,
  constraints: number,
  handlers: QueryHandlers,
): HTMLButtonElement[] {
  main.textContent = "";
  const progress = el(
    "div",
    { class: "progress" },
    el(
      "span",
      { id: "iteration", "data-iteration": String(q.iteration) },
      `Question ${q.iteration} of ${q.expected_total}`,
    ),
    el(
      "span",
      { id: "constraints", "data-count": String(constraints) },
      `Preferences gathered: ${constraints}`,
    ),
  );
  const [first, second] = q.candidates;
  const cards = el("div", { class: "cards", id: "cards" });
  if (first && second) {
    cards.append(candidateCardEl(first, second), candidateCardEl(second, first));
  }
  const buttons: HTMLButtonElement[] = [];
  const bar = el("div", { class: "answer-bar", id: "answers" });
  const choices: Choice[] = [...CHOICES_BY_KIND[q.kind], ...(q.can_stop ? (["stop"] as Choice[]) : [])];
  for (const choice of choices) {
    const b = el(
      "button",
      { class: `answer answer-${choice}`, "data-choice": choice, type: "button" },
      CHOICE_LABELS[choice],
    );
    b.addEventListener("click", () => handlers.onChoice(choice));
    buttons.push(b);
    bar.append(b);
  }
  main.append(
    progress,
    el("p", { class: "question-text", "data-kind": q.kind }, QUESTION_TEXT[q.kind]),
    cards,
    bar,
  );
  return buttons;
}

function finalDigest(c: FinalCandidate): HTMLElement {
  const span = c.breakdown.reduce((m, entry) => Math.max(m, Math.abs(entry.value)), 0);
  const bars = el("ul", { class: "metric-list" });
  for (const entry of c.breakdown) bars.append(metricRow(entry, span));
  return el(
    "section",
    {
      class: "card card-final",
      id: "final-card",
      "data-candidate-id": c.id,
      "data-metrics": JSON.stringify(c.metrics),
    },
    el("h2", { class: "card-title" }, "Recommended design"),
    bars,
  );
}

function historyList(history: HistoryEntry[]): HTMLElement {
  const list = el("ol", { class: "history", id: "history" });
  for (const h of history) {
    const mark = h.constraining ? "" : " (no preference recorded)";
    list.append(
      el(
        "li",
        {
          "data-iteration": String(h.iteration),
          "data-choice": h.choice,
          "data-constraining": String(h.constraining),
        },
        `Q${h.iteration} · ${h.kind} — ${CHOICE_LABELS[h.choice]}${mark}`,
      ),
    );
  }
  return list;
}

export interface RecommendationHandlers {
  onDownload: () => void;
  onRestart: () => void;
}

export function renderRecommendation(
  main: HTMLElement,
  rec: Recommendation,
  history: HistoryEntry[],
  handlers: RecommendationHandlers,
): void {
  main.textContent = "";
  const download = el(
    "button",
    { id: "download-btn", class: "secondary", type: "button" },
    "Download transcript",
  );
  download.addEventListener("click", () => handlers.onDownload());
  const restart = el(
    "button",
    { id: "restart-btn", class: "secondary", type: "button" },
    "Start a new session",
  );
  restart.addEventListener("click", () => handlers.onRestart());
  const answered = history.length;
  main.append(
    el(
      "div",
      { class: "recommendation", id: "recommendation", "data-stop-reason": rec.stop_reason },
      finalDigest(rec.recommendation),
      el(
        "p",
        { class: "stop-reason" },
        `Session finished: ${describeStopReason(rec.stop_reason)}.`,
      ),
      el(
        "p",
        { class: "answered-note" },
        `You answered ${answered} question${answered === 1 ? "" : "s"}.`,
      ),
      el("h3", {}, "Your answers"),
      historyList(history),
      el("div", { class: "final-actions" }, download, restart),
    ),
  );
}

/** Surfaces the transcript bytes as a downloadable link and clicks it.
 * The anchor stays in the DOM so the exact offered bytes remain inspectable. */
export function offerDownload(main: HTMLElement, filename: string, text: string): HTMLAnchorElement {
  const existing = main.querySelector<HTMLAnchorElement>("#transcript-link");
  existing?.remove();
  const bytes = new TextEncoder().encode(text);
  let binary = "";
  const chunk = 0x1000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  const link = el(
    "a",
    {
      id: "transcript-link",
      href: `data:application/x-ndjson;base64,${btoa(binary)}`,
      download: filename,
    },
    filename,
  );
  main.querySelector(".final-actions")?.append(link);
  try {
    link.click();
  } catch {
    // Headless DOMs may refuse data: navigation; the link itself remains.
  }
  return link;
}
