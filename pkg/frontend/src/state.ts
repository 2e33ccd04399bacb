/**
 * Review-session state and its pure transitions.
 *
 * All state lives client-side; a page refresh starts over (the server is
 * stateless). Editing the draft invalidates every suggestion, because
 * suggestion ids are content hashes of the draft on the server side and
 * stale offsets would corrupt overlays.
 */

import type { Suggestion } from "./api.js";

export type Decision = "pending" | "accepted" | "rejected";

export interface ReviewState {
  /** Current draft text in the editor. */
  draft: string;
  /** Draft the suggestions were computed for, or null before any fetch. */
  suggestedFor: string | null;
  suggestions: Suggestion[];
  decisions: Record<string, Decision>;
  parserWarnings: string[];
  /** Rendered markdown for the current accepted set (equals the draft
   * when nothing is accepted). */
  preview: string;
  error: string | null;
  loading: boolean;
}

export function initialState(draft = ""): ReviewState {
  return {
    draft,
    suggestedFor: null,
    suggestions: [],
    decisions: {},
    parserWarnings: [],
    preview: draft,
    error: null,
    loading: false,
  };
}

/** Editing the draft drops all suggestions and decisions. */
export function withDraft(state: ReviewState, draft: string): ReviewState {
  if (draft === state.draft) return state;
  return { ...initialState(draft) };
}

export function withLoading(state: ReviewState, loading: boolean): ReviewState {
  return { ...state, loading, error: loading ? null : state.error };
}

export function withError(state: ReviewState, error: string): ReviewState {
  // the draft is preserved so nothing the author typed is lost
  return { ...state, error, loading: false };
}

export function withSuggestions(
  state: ReviewState,
  suggestions: Suggestion[],
  parserWarnings: string[],
  forDraft: string,
): ReviewState {
  const decisions: Record<string, Decision> = {};
  for (const s of suggestions) decisions[s.id] = "pending";
  return {
    ...state,
    suggestedFor: forDraft,
    suggestions,
    decisions,
    parserWarnings,
    preview: forDraft,
    error: null,
    loading: false,
  };
}

/** Flip one suggestion between accepted and not; unknown ids are a bug. */
export function toggleDecision(state: ReviewState, id: string): ReviewState {
  const current = state.decisions[id];
  if (current === undefined) throw new Error(`unknown suggestion id ${id}`);
  const next: Decision = current === "accepted" ? "rejected" : "accepted";
  return { ...state, decisions: { ...state.decisions, [id]: next } };
}

export function withPreview(state: ReviewState, preview: string): ReviewState {
  return { ...state, preview, error: null };
}

export function acceptedIds(state: ReviewState): string[] {
  return state.suggestions
    .filter((s) => state.decisions[s.id] === "accepted")
    .map((s) => s.id);
}

export function suggestionsStale(state: ReviewState): boolean {
  return state.suggestedFor !== null && state.suggestedFor !== state.draft;
}

/** Confidence bucket for presentation only (color ramp). */
export function confidenceBucket(confidence: number): "high" | "medium" | "low" {
  if (confidence >= 0.75) return "high";
  if (confidence >= 0.45) return "medium";
  return "low";
}
