// Browser entry point: wires the session state machine and the renderers
// to the DOM. Keyboard-first: keys 1-4 toggle the protocol steps, L / I
// submit the verdict, C toggles the cross-backend comparison.

import { ApiClient } from "./api.js";
import {
  FormAnswers,
  ReviewSession,
  UnknownRunError,
  allAnswered,
  currentExplanation,
  forcedVerdict,
  isComplete,
  loadSession,
  retrySubmit,
  submitVerdict,
  verdictEnabled,
} from "./session.js";
import {
  renderAgreementWidget,
  renderCompletion,
  renderExplanationView,
  renderProgress,
  renderSideBySide,
} from "./render.js";
import { STEP_PROMPTS, StepAnswers, Verdict } from "./types.js";

const app = document.getElementById("app")!;

interface UiState {
  api: ApiClient | null;
  session: ReviewSession | null;
  answers: FormAnswers;
  compare: boolean;
  notice: string;
}

const state: UiState = {
  api: null,
  session: null,
  answers: [null, null, null, null],
  compare: false,
  notice: "",
};

function resetForm() {
  state.answers = [null, null, null, null];
  state.compare = false;
  state.notice = "";
}

// -- setup screen -----------------------------------------------------------

async function renderSetup(message = "") {
  app.innerHTML = `
    <div class="setup">
      <h1>Explanation review</h1>
      ${message ? `<p class="error">${message}</p>` : ""}
      <label>Service URL <input id="base-url" value="${localStorage.getItem("baseUrl") ?? "http://127.0.0.1:8765"}"></label>
      <label>Reviewer id <input id="reviewer" value="${localStorage.getItem("reviewer") ?? ""}" placeholder="your initials"></label>
      <button id="connect">Load runs</button>
      <div id="run-list"></div>
    </div>`;
  document.getElementById("connect")!.addEventListener("click", listRuns);
}

async function listRuns() {
  const baseUrl = (document.getElementById("base-url") as HTMLInputElement).value;
  const reviewer = (document.getElementById("reviewer") as HTMLInputElement).value.trim();
  if (!reviewer) {
    renderSetup("enter a reviewer id first");
    return;
  }
  localStorage.setItem("baseUrl", baseUrl);
  localStorage.setItem("reviewer", reviewer);
  state.api = new ApiClient(baseUrl);
  const target = document.getElementById("run-list")!;
  try {
    const { runs } = await state.api.listRuns();
    target.innerHTML = runs
      .map(
        (r) =>
          `<button class="run-button" data-run="${r.run_id}">` +
          `${r.run_id} — ${r.backend}, ${r.n_explanations} explanations, ${r.n_judged} judged</button>`,
      )
      .join("");
    for (const el of Array.from(target.querySelectorAll(".run-button"))) {
      el.addEventListener("click", () => startSession((el as HTMLElement).dataset.run!, reviewer));
    }
  } catch (error) {
    target.innerHTML = `<p class="error">could not reach the service: ${String(error)}</p>`;
  }
}

async function startSession(runId: string, reviewer: string) {
  try {
    state.session = await loadSession(state.api!, runId, reviewer);
    resetForm();
    renderReview();
  } catch (error) {
    if (error instanceof UnknownRunError) {
      renderSetup(error.message);
    } else {
      renderSetup(String(error));
    }
  }
}

// -- review screen ----------------------------------------------------------

function stepRow(index: number): string {
  const answer = state.answers[index];
  const yes = answer === true ? "selected" : "";
  const no = answer === false ? "selected" : "";
  return `
    <div class="step" data-step="${index}">
      <span class="step-key">${index + 1}</span>
      <span class="step-prompt">${STEP_PROMPTS[index]}</span>
      <button class="step-yes ${yes}" data-step="${index}" data-answer="yes">yes</button>
      <button class="step-no ${no}" data-step="${index}" data-answer="no">no</button>
    </div>`;
}

function renderReview() {
  const session = state.session!;
  if (isComplete(session)) {
    app.innerHTML =
      renderAgreementWidget(session.agreement) +
      renderCompletion(session.judgedCount, session.nTest);
    return;
  }
  const explanation = currentExplanation(session)!;
  const forced = forcedVerdict(state.answers);
  const logicalOk = verdictEnabled(state.answers, "logical") && forced === null;
  const illogicalOk = verdictEnabled(state.answers, "illogical");
  const retry = session.pendingRetry
    ? `<div class="retry"><span class="error">submission failed; nothing was lost.</span>
         <button id="retry">Retry (R)</button></div>`
    : "";
  app.innerHTML = `
    <div class="review">
      <header class="topbar">
        ${renderProgress(session.judgedCount, session.nTest)}
        ${renderAgreementWidget(session.agreement)}
        <button id="compare-toggle">${state.compare ? "single view (C)" : "compare backends (C)"}</button>
      </header>
      ${state.notice ? `<p class="notice">${state.notice}</p>` : ""}
      <div id="explanation-view">${renderExplanationView(explanation)}</div>
      <div id="compare-view"></div>
      <div class="protocol">
        ${[0, 1, 2, 3].map(stepRow).join("")}
        ${forced === "illogical" ? `<p class="forced">step 3 failed: the verdict must be illogical</p>` : ""}
      </div>
      <div class="verdicts">
        <button id="verdict-logical" ${logicalOk ? "" : "disabled"}>Logical (L)</button>
        <button id="verdict-illogical" ${illogicalOk ? "" : "disabled"}>Illogical (I)</button>
      </div>
      ${retry}
    </div>`;

  for (const el of Array.from(app.querySelectorAll(".step button"))) {
    el.addEventListener("click", () => {
      const button = el as HTMLElement;
      setAnswer(Number(button.dataset.step), button.dataset.answer === "yes");
    });
  }
  document.getElementById("verdict-logical")?.addEventListener("click", () => submit("logical"));
  document.getElementById("verdict-illogical")?.addEventListener("click", () => submit("illogical"));
  document.getElementById("compare-toggle")?.addEventListener("click", toggleCompare);
  document.getElementById("retry")?.addEventListener("click", doRetry);
  if (state.compare) {
    void fillCompare(explanation.doc_id);
  }
}

function setAnswer(step: number, value: boolean) {
  state.answers[step] = value;
  renderReview();
}

async function submit(verdict: Verdict) {
  const session = state.session!;
  if (!allAnswered(state.answers)) return;
  const result = await submitVerdict(state.api!, session, state.answers as StepAnswers, verdict);
  if (result.kind === "advanced") {
    state.notice =
      result.outcome.kind === "conflict"
        ? `already judged (${result.outcome.existingVerdict ?? "verdict on record"}); moved on`
        : "";
    resetForm();
  } else if (result.kind === "retry-needed") {
    state.notice = "";
  } else if (result.kind === "invalid") {
    state.notice = result.message;
  }
  renderReview();
}

async function doRetry() {
  const result = await retrySubmit(state.api!, state.session!);
  if (result.kind === "advanced") {
    resetForm();
  }
  renderReview();
}

async function toggleCompare() {
  state.compare = !state.compare;
  renderReview();
}

async function fillCompare(docId: string) {
  const target = document.getElementById("compare-view");
  if (!target) return;
  const { runs } = await state.api!.listRuns();
  const columns = [];
  for (const run of runs) {
    const { explanations } = await state.api!.runExplanations(run.run_id);
    const match = explanations.find((e) => e.doc_id === docId);
    if (match) {
      columns.push({ backend: run.backend, record: match });
    }
  }
  target.innerHTML = renderSideBySide(columns);
}

// -- keyboard ----------------------------------------------------------------

document.addEventListener("keydown", (event) => {
  if (!state.session || isComplete(state.session)) return;
  const target = event.target as HTMLElement | null;
  if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
  if (event.key >= "1" && event.key <= "4") {
    const index = Number(event.key) - 1;
    state.answers[index] = state.answers[index] === null ? true : !state.answers[index];
    renderReview();
  } else if (event.key === "l" || event.key === "L") {
    if (verdictEnabled(state.answers, "logical") && forcedVerdict(state.answers) === null) {
      void submit("logical");
    }
  } else if (event.key === "i" || event.key === "I") {
    if (verdictEnabled(state.answers, "illogical")) void submit("illogical");
  } else if (event.key === "c" || event.key === "C") {
    void toggleCompare();
  } else if ((event.key === "r" || event.key === "R") && state.session.pendingRetry) {
    void doRetry();
  }
});

void renderSetup();
