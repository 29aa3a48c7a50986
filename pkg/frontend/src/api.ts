// Thin typed client for the annotation service JSON API. Every number the
// UI shows comes out of these payloads; nothing is recomputed client-side.

export type Answer = "yes" | "no" | "notsure";
export const ANSWERS: readonly Answer[] = ["yes", "no", "notsure"];

export interface TaskView {
  task_id: string;
  phrase: string;
  sense: string;
  question: string;
}

export interface SenseProgress {
  total: number;
  complete: number;
  incomplete: number;
  responses: number;
}

export interface SenseResults {
  complete: number;
  notsure: number;
  majority_yes_pct: number | null;
  fleiss_kappa: number | null;
}

export interface VerdictView {
  task_id: string;
  accepted: boolean;
  tally: { [answer: string]: number };
}

export interface ResultsPayload {
  verdicts: VerdictView[];
  per_sense: { [sense: string]: SenseResults };
}

export type SubmitOutcome = "recorded" | "duplicate";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Client {
  constructor(private base: string = "") {}

  // null means the queue is exhausted for this annotator (HTTP 204)
  async nextTask(annotator: string): Promise<TaskView | null> {
    const res = await fetch(
      `${this.base}/api/tasks/next?annotator=${encodeURIComponent(annotator)}`
    );
    if (res.status === 204) return null;
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as TaskView;
  }

  // 409 (someone already answered as this handle) is an expected outcome,
  // not an error: the caller just moves on without double-counting.
  async submit(
    taskId: string,
    annotator: string,
    answer: Answer
  ): Promise<SubmitOutcome> {
    const res = await fetch(`${this.base}/api/responses`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ task_id: taskId, annotator, answer }),
    });
    if (res.status === 201) return "recorded";
    if (res.status === 409) return "duplicate";
    throw new ApiError(res.status, await res.text());
  }

  async progress(): Promise<{ [sense: string]: SenseProgress }> {
    const res = await fetch(`${this.base}/api/progress`);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return await res.json();
  }

  async results(): Promise<ResultsPayload> {
    const res = await fetch(`${this.base}/api/results`);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return await res.json();
  }
}
