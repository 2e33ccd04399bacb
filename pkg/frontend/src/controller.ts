/**
 * Async orchestration between the state store and the service.
 *
 * At most one suggest request is in flight: a new fetch aborts the
 * previous one. Every decision change re-renders the preview on the
 * server; a 409 (stale ids) triggers a full resync.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  ReviewState,
  acceptedIds,
  initialState,
  toggleDecision,
  withDraft,
  withError,
  withLoading,
  withPreview,
  withSuggestions,
} from "./state.js";

export type Listener = (state: ReviewState) => void;

export class ReviewController {
  private state: ReviewState = initialState();
  private listeners: Listener[] = [];
  private inflight: AbortController | null = null;

  constructor(private readonly api: ApiClient) {}

  current(): ReviewState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.state);
  }

  private set(state: ReviewState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }

  setDraft(draft: string): void {
    this.set(withDraft(this.state, draft));
  }

  async fetchSuggestions(): Promise<void> {
    const draft = this.state.draft;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.set(withLoading(this.state, true));
    try {
      const resp = await this.api.suggest(draft, controller.signal);
      if (controller.signal.aborted) return;
      this.set(withSuggestions(this.state, resp.suggestions, resp.parser_warnings, draft));
    } catch (err) {
      if (controller.signal.aborted) return;
      this.set(withError(this.state, describe(err)));
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  async toggle(id: string): Promise<void> {
    this.set(toggleDecision(this.state, id));
    await this.refreshPreview();
  }

  async refreshPreview(): Promise<void> {
    const body = this.state.suggestedFor;
    if (body === null) return;
    const ids = acceptedIds(this.state);
    try {
      const resp = await this.api.render(body, ids);
      this.set(withPreview(this.state, resp.markdown));
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // ids no longer valid for this body: resync from scratch
        await this.fetchSuggestions();
        return;
      }
      this.set(withError(this.state, describe(err)));
    }
  }

  /** The exported markdown is exactly the last preview the server sent. */
  exportMarkdown(): string {
    return this.state.preview;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `service error ${err.status}: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}
