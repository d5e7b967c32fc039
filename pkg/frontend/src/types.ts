/** Wire types of the session HTTP API, mirrored field-for-field. */

export interface BreakdownEntry {
  label: string;
  value: number;
  unit: string;
  higher_better: boolean;
}

export type Role = "left" | "right" | "challenger" | "incumbent";

export interface CandidateCard {
  id: string;
  metrics: number[];
  breakdown: BreakdownEntry[];
  role: Role;
}

export type QueryKind = "compare" | "propose";

export interface CreateResponse {
  id: string;
  scenario: string;
  n_query: number;
}

export interface AwaitingPayload {
  state: "AwaitingAnswer";
  kind: QueryKind;
  iteration: number;
  expected_total: number;
  can_stop: boolean;
  candidates: CandidateCard[];
}

export interface ThinkingPayload {
  state: "Thinking";
}

export interface FinishedPayload {
  state: "Finished";
  stop_reason: string | null;
  error?: string;
}

export type QueryResponse = AwaitingPayload | ThinkingPayload | FinishedPayload;

export interface AnswerResponse {
  state: "AwaitingAnswer" | "Thinking" | "Finished";
  answered: number;
  stop_reason?: string;
}

export interface FinalCandidate {
  id: string;
  metrics: number[];
  breakdown: BreakdownEntry[];
}

export interface Recommendation {
  recommendation: FinalCandidate;
  allocation: number[];
  stop_reason: string;
  queries: number;
  transcript: string;
}

/** Answers a Compare question accepts. */
export type CompareChoice = "left" | "right" | "equal" | "too_hard" | "stop";
/** Answers a Propose question accepts. */
export type ProposeChoice = "accept" | "reject" | "too_hard" | "stop";
export type Choice = CompareChoice | ProposeChoice;

/** One line of the client-side session log shown on the final screen. */
export interface HistoryEntry {
  iteration: number;
  kind: QueryKind;
  choice: Choice;
  /** Whether the answer pinned down a new preference constraint
   * ("too hard to call" does not). */
  constraining: boolean;
}
