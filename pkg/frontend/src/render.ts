// Pure HTML renderers. Every number that appears in the output is a
// formatted copy of a value from a service payload; nothing is derived or
// invented beyond formatting and bar geometry.

import type { AgreementReport, ExplanationRecord, Label } from "./types.js";
import { LABELS, predictedLabel } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export const formatProbability = (p: number): string => p.toFixed(2);
export const formatWeight = (w: number): string => (w >= 0 ? "+" : "") + w.toFixed(3);

export function renderProbabilityBars(record: ExplanationRecord): string {
  const winner = predictedLabel(record);
  const rows = LABELS.map((label) => {
    const p = record.class_probabilities[label];
    const width = Math.max(0, Math.min(100, p * 100)).toFixed(1);
    const cls = label === winner ? "prob-row predicted" : "prob-row";
    return (
      `<div class="${cls}" data-label="${label}">` +
      `<span class="prob-label">${label}</span>` +
      `<span class="prob-bar"><span class="prob-fill" style="width:${width}%"></span></span>` +
      `<span class="prob-value">${formatProbability(p)}</span>` +
      `</div>`
    );
  });
  return `<div class="probabilities">${rows.join("")}</div>`;
}

export function renderContributionPanel(record: ExplanationRecord, label: Label): string {
  const ranked = record.contributions[label];
  const maxAbs = Math.max(...ranked.map(([, w]) => Math.abs(w)), 1e-12);
  const rows = ranked.map(([token, weight]) => {
    const width = ((Math.abs(weight) / maxAbs) * 100).toFixed(1);
    const sign = weight >= 0 ? "positive" : "negative";
    return (
      `<div class="contrib-row ${sign}" data-token="${escapeHtml(token)}">` +
      `<span class="contrib-token">${escapeHtml(token)}</span>` +
      `<span class="contrib-bar"><span class="contrib-fill ${sign}" style="width:${width}%"></span></span>` +
      `<span class="contrib-value">${formatWeight(weight)}</span>` +
      `</div>`
    );
  });
  return (
    `<div class="contributions" data-label="${label}">` +
    `<h4>${label}</h4>${rows.join("")}</div>`
  );
}

/** The document's preprocessed text with the chosen class's contribution
 * tokens highlighted (green for positive weight, red for negative). */
export function renderHighlightedText(record: ExplanationRecord, label: Label): string {
  const weights = new Map(record.contributions[label]);
  const parts = record.tokens.map((token) => {
    if (!weights.has(token)) {
      return escapeHtml(token);
    }
    const sign = (weights.get(token) ?? 0) >= 0 ? "positive" : "negative";
    return `<mark class="${sign}">${escapeHtml(token)}</mark>`;
  });
  return `<p class="document-text" data-label="${label}">${parts.join(" ")}</p>`;
}

export function renderExplanationView(record: ExplanationRecord): string {
  const winner = predictedLabel(record);
  const panels = LABELS.map((label) => renderContributionPanel(record, label)).join("");
  return (
    `<section class="explanation" data-doc="${escapeHtml(record.doc_id)}" data-id="${record.id}">` +
    `<header><h3>document ${escapeHtml(record.doc_id)}</h3>` +
    `<span class="predicted">predicted: ${winner}</span></header>` +
    renderProbabilityBars(record) +
    `<div class="panel-grid">${panels}</div>` +
    renderHighlightedText(record, winner) +
    `</section>`
  );
}

/** Side-by-side comparison of the same document across backends. */
export function renderSideBySide(records: { backend: string; record: ExplanationRecord }[]): string {
  const columns = records
    .map(
      ({ backend, record }) =>
        `<div class="compare-column"><h3>${escapeHtml(backend)}</h3>` +
        renderProbabilityBars(record) +
        renderContributionPanel(record, predictedLabel(record)) +
        `</div>`,
    )
    .join("");
  return `<div class="compare">${columns}</div>`;
}

export function renderAgreementWidget(agreement: AgreementReport | null): string {
  if (!agreement) {
    return `<div class="agreement" data-score="">agreement: not yet available</div>`;
  }
  const backendRows = Object.entries(agreement.per_backend)
    .map(([backend, score]) => `<span class="agreement-backend">${escapeHtml(backend)}: ${score}</span>`)
    .join(" ");
  return (
    `<div class="agreement" data-score="${agreement.score}">` +
    `agreement: <strong>${agreement.score}</strong> ` +
    `(${agreement.c}/${agreement.n_test} logical; ` +
    `${agreement.n_judged} judged, ${agreement.score_judged} over judged) ` +
    backendRows +
    `</div>`
  );
}

export function renderProgress(judged: number, nTest: number): string {
  return `<div class="progress">reviewed ${judged} of ${nTest}</div>`;
}

export function renderCompletion(judged: number, nTest: number): string {
  return (
    `<div class="completion"><h2>Review complete</h2>` +
    `<p>All ${nTest} explanations have a verdict from you (${judged} recorded this session or before).</p></div>`
  );
}
