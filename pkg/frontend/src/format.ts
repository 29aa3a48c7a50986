// Pure display formatting for the coordinator dashboard. Values arrive from
// /api/results and /api/progress; these helpers only turn them into text.

import { SenseProgress, SenseResults } from "./api.js";

export function formatPct(value: number | null): string {
  return value === null ? "—" : `${value.toFixed(1)}%`;
}

// A null kappa is the service saying "undefined" (all responses in one
// category), which gets an explicit badge rather than NaN or a dash.
export function formatKappa(value: number | null): string {
  return value === null ? "κ undefined" : value.toFixed(2);
}

export function formatProgress(p: SenseProgress): string {
  return `${p.complete}/${p.total} complete (${p.responses} responses)`;
}

export interface ResultRow {
  sense: string;
  majorityYes: string;
  kappa: string;
  notsure: string;
  complete: string;
}

export function resultRow(sense: string, r: SenseResults): ResultRow {
  return {
    sense,
    majorityYes: formatPct(r.majority_yes_pct),
    kappa: formatKappa(r.fleiss_kappa),
    notsure: String(r.notsure),
    complete: String(r.complete),
  };
}
