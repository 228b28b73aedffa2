// Thin client for the workbench HTTP API. The base URL is the single piece
// of configuration; fetch is injectable so tests can run against fixtures.

import type {
  AgreementReport,
  ExplanationRecord,
  RunSummary,
  StepAnswers,
  Verdict,
} from "./types.js";

export type SubmitOutcome =
  | { kind: "created"; recordId: string; agreement: AgreementReport }
  | { kind: "conflict"; message: string; existingVerdict?: Verdict }
  | { kind: "rejected"; code: string; message: string }
  | { kind: "network"; message: string };

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = await response.json();
    return new ApiError(body.code ?? "error", body.message ?? response.statusText, response.status);
  } catch {
    return new ApiError("error", response.statusText, response.status);
  }
}

export class ApiClient {
  private base: string;

  constructor(
    baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  listRuns(): Promise<{ runs: RunSummary[] }> {
    return this.getJson("/runs");
  }

  runExplanations(runId: string): Promise<{ explanations: ExplanationRecord[]; n_test: number }> {
    return this.getJson(`/runs/${runId}/explanations`);
  }

  runMetrics(runId: string): Promise<{ metrics: { scope: string; metric: string; value: string }[] }> {
    return this.getJson(`/runs/${runId}/metrics`);
  }

  runAgreement(runId: string): Promise<AgreementReport> {
    return this.getJson(`/runs/${runId}/agreement`);
  }

  getExplanation(id: string): Promise<ExplanationRecord & { run_id: string; backend: string }> {
    return this.getJson(`/explanations/${id}`);
  }

  async submitJudgment(
    explanationId: string,
    reviewer: string,
    stepAnswers: StepAnswers,
    verdict: Verdict,
  ): Promise<SubmitOutcome> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}/explanations/${explanationId}/judgments`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ reviewer, step_answers: stepAnswers, verdict }),
      });
    } catch (error) {
      return { kind: "network", message: String(error) };
    }
    if (response.status === 201) {
      const body = await response.json();
      return { kind: "created", recordId: body.record_id, agreement: body.agreement };
    }
    const body = await response.json().catch(() => ({}));
    if (response.status === 409) {
      return {
        kind: "conflict",
        message: body.message ?? "already judged",
        existingVerdict: body.existing?.verdict,
      };
    }
    return {
      kind: "rejected",
      code: body.code ?? "error",
      message: body.message ?? response.statusText,
    };
  }
}
