// Review session state machine: an ordered queue of unjudged explanations,
// the protocol-step form rules, and exactly-once verdict submission.

import type { ApiClient, SubmitOutcome } from "./api.js";
import type { AgreementReport, ExplanationRecord, StepAnswers, Verdict } from "./types.js";

export interface PendingSubmission {
  explanationId: string;
  stepAnswers: StepAnswers;
  verdict: Verdict;
}

export interface ReviewSession {
  runId: string;
  reviewer: string;
  nTest: number;
  queue: ExplanationRecord[];
  judgedCount: number; // by this reviewer, monotone, <= nTest
  agreement: AgreementReport | null;
  submittedIds: Set<string>; // client idempotency guard
  inFlight: string | null; // explanation id currently being posted
  pendingRetry: PendingSubmission | null; // survives a network failure
}

export class UnknownRunError extends Error {}

export async function loadSession(
  api: ApiClient,
  runId: string,
  reviewer: string,
): Promise<ReviewSession> {
  let payload;
  try {
    payload = await api.runExplanations(runId);
  } catch (error) {
    throw new UnknownRunError(`run ${runId} could not be loaded: ${String(error)}`);
  }
  const agreement = await api.runAgreement(runId).catch(() => null);
  // stable order: exactly as the service lists them
  const queue = payload.explanations.filter((e) => !(e.judged_by ?? []).includes(reviewer));
  const judgedCount = payload.explanations.length - queue.length;
  return {
    runId,
    reviewer,
    nTest: payload.n_test,
    queue,
    judgedCount,
    agreement,
    submittedIds: new Set(),
    inFlight: null,
    pendingRetry: null,
  };
}

export function currentExplanation(session: ReviewSession): ExplanationRecord | null {
  return session.queue[0] ?? null;
}

export function isComplete(session: ReviewSession): boolean {
  return session.queue.length === 0;
}

// -- form rules -------------------------------------------------------------

export type FormAnswers = [boolean | null, boolean | null, boolean | null, boolean | null];

export function allAnswered(answers: FormAnswers): answers is StepAnswers {
  return answers.every((a) => a !== null);
}

/** Step 3 answered "relates better to another label" forces illogical. */
export function forcedVerdict(answers: FormAnswers): Verdict | null {
  if (answers[2] === false) return "illogical";
  return null;
}

/** The verdict buttons only enable once every step is answered; "logical"
 * additionally requires steps 2-4 to hold (mirrors the server rule). */
export function verdictEnabled(answers: FormAnswers, verdict: Verdict): boolean {
  if (!allAnswered(answers)) return false;
  if (verdict === "logical") {
    return answers[1] === true && answers[2] === true && answers[3] === true;
  }
  return true;
}

// -- submission -------------------------------------------------------------

export type SubmitResult =
  | { kind: "advanced"; outcome: SubmitOutcome }
  | { kind: "duplicate-ignored" }
  | { kind: "invalid"; message: string }
  | { kind: "retry-needed"; outcome: SubmitOutcome };

export async function submitVerdict(
  api: ApiClient,
  session: ReviewSession,
  stepAnswers: StepAnswers,
  verdict: Verdict,
): Promise<SubmitResult> {
  const explanation = currentExplanation(session);
  if (!explanation) {
    return { kind: "invalid", message: "nothing left to review" };
  }
  if (verdict === "logical" && !(stepAnswers[1] && stepAnswers[2] && stepAnswers[3])) {
    return {
      kind: "invalid",
      message: "a logical verdict requires steps 2-4 to hold",
    };
  }
  // exactly-once from this client: drop duplicate submits (double click)
  if (session.submittedIds.has(explanation.id) || session.inFlight === explanation.id) {
    return { kind: "duplicate-ignored" };
  }
  session.inFlight = explanation.id;
  const outcome = await api.submitJudgment(explanation.id, session.reviewer, stepAnswers, verdict);
  session.inFlight = null;
  if (outcome.kind === "network") {
    // keep the answers for the retry affordance; nothing was recorded
    session.pendingRetry = { explanationId: explanation.id, stepAnswers, verdict };
    return { kind: "retry-needed", outcome };
  }
  session.pendingRetry = null;
  if (outcome.kind === "created" || outcome.kind === "conflict") {
    // conflict means the server already holds a verdict for this reviewer;
    // either way this explanation leaves the queue
    session.submittedIds.add(explanation.id);
    session.queue = session.queue.slice(1);
    session.judgedCount = Math.min(session.judgedCount + 1, session.nTest);
    if (outcome.kind === "created") {
      session.agreement = outcome.agreement;
    }
    return { kind: "advanced", outcome };
  }
  return { kind: "invalid", message: outcome.message };
}

export async function retrySubmit(api: ApiClient, session: ReviewSession): Promise<SubmitResult> {
  const pending = session.pendingRetry;
  if (!pending) {
    return { kind: "invalid", message: "nothing to retry" };
  }
  session.pendingRetry = null;
  return submitVerdict(api, session, pending.stepAnswers, pending.verdict);
}
