// Wire types for the workbench review API. Field names mirror the JSON
// payloads exactly; the UI never invents values that are not in them.

export type Label = "characterization" | "modeling" | "processing" | "synthesis";

export const LABELS: Label[] = ["characterization", "modeling", "processing", "synthesis"];

export interface ExplanationRecord {
  id: string;
  doc_id: string;
  tokens: string[];
  class_probabilities: Record<Label, number>;
  contributions: Record<Label, [string, number][]>;
  config_fingerprint: string;
  judged_by?: string[];
}

export interface RunSummary {
  run_id: string;
  backend: string;
  n_test: number;
  n_explanations: number;
  n_judged: number;
  metrics?: Record<string, number>;
}

export interface AgreementReport {
  c: number;
  n_test: number;
  score: string;
  n_judged: number;
  score_judged: string;
  per_backend: Record<string, string>;
}

export type Verdict = "logical" | "illogical";

// Answers to the four protocol steps, in order:
//   0: the significant terms were collected and considered
//   1: no term is too vague to tell a story with its neighbors
//   2: the terms do NOT relate better to another label
//   3: the story the terms tell matches the predicted label
export type StepAnswers = [boolean, boolean, boolean, boolean];

export const STEP_PROMPTS: string[] = [
  "Collected the most significant terms for the predicted label",
  "No term is too vague (or vague terms still tell a story in context)",
  "The terms do not relate better to another label",
  "The story these terms tell matches the predicted topic",
];

export function predictedLabel(record: ExplanationRecord): Label {
  let best: Label = LABELS[0]!;
  for (const label of LABELS) {
    if (record.class_probabilities[label] > record.class_probabilities[best]) {
      best = label;
    }
  }
  return best;
}
