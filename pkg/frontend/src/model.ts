/** Pure presentation logic: everything here is a function of the server's
 * session state, so the UI can be re-rendered from scratch after any poll. */

import type { GenerationRecord, SessionState, Suggestion } from "./api.js";

export interface PoolBadge {
  label: string;
  isOriginal: boolean;
  isNew: boolean;
}

/** Pool chips with original/new markers; "new" means added this generation. */
export function poolBadges(state: SessionState): PoolBadge[] {
  const last = state.history[state.history.length - 1];
  const fresh = new Set(last ? last.new_concepts : []);
  const original = new Set(state.original);
  return state.pool.map((label) => ({
    label,
    isOriginal: original.has(label),
    isNew: fresh.has(label),
  }));
}

export interface SuggestionCard {
  concept: string;
  provenance: string;
  title: string;
  index: number;
}

const PROVENANCE_TITLES: Record<string, string> = {
  cas: "Coherent but culturally unexpected",
  llm: "Language-model suggestion",
  llm_free: "Language-model suggestion (open vocabulary)",
  random: "Random draw",
};

export function suggestionCards(suggestions: Suggestion[]): SuggestionCard[] {
  return suggestions.map((s, index) => ({
    concept: s.concept,
    provenance: s.provenance,
    title: PROVENANCE_TITLES[s.provenance] ?? s.provenance,
    index,
  }));
}

/** Percent string for the adoption readout, e.g. "67% (2/3)". */
export function adoptionSummary(state: SessionState): string {
  const { adopted, choices, rate } = state.adoption;
  if (choices === 0) return "no choices yet";
  return `${Math.round(rate * 100)}% (${adopted}/${choices})`;
}

export type Trend = "rising" | "falling" | "flat" | "n/a";

/** Direction of the novelty curve over its last two scored generations. */
export function noveltyTrend(trend: number[]): Trend {
  if (trend.length < 2) return "n/a";
  const prev = trend[trend.length - 2];
  const last = trend[trend.length - 1];
  if (last > prev) return "rising";
  if (last < prev) return "falling";
  return "flat";
}

export interface HistoryRow {
  generation: number;
  name: string;
  added: string;
  removed: string;
  novelty: string;
  provenance: string;
  failed: boolean;
}

export function historyRows(history: GenerationRecord[]): HistoryRow[] {
  return history
    .slice()
    .reverse()
    .map((record) => ({
      generation: record.generation,
      name: record.status === "ok" ? record.name : "(failed)",
      added: record.new_concepts.join(", ") || "—",
      removed: record.removed_concepts.join(", ") || "—",
      novelty: record.status === "ok" ? record.novelty_combined.toFixed(3) : "—",
      provenance: record.provenance,
      failed: record.status !== "ok",
    }));
}

export function isComplete(state: SessionState): boolean {
  return state.generation >= state.generations_total;
}

/** Concepts the user may still type in manually. */
export function eligibleConcepts(vocabulary: string[], state: SessionState): string[] {
  const blocked = new Set([...state.pool, ...state.expired]);
  return vocabulary.filter((label) => !blocked.has(label));
}
