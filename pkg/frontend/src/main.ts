/** DOM wiring. No highlighting logic here: state transitions live in
 * state.ts, service calls in api.ts/controller.ts. */

import { ApiClient } from "./api.js";
import { ReviewController } from "./controller.js";
import { overlaySegments } from "./overlay.js";
import { ReviewState, confidenceBucket, suggestionsStale } from "./state.js";

const api = new ApiClient("");
const controller = new ReviewController(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const draftInput = el<HTMLTextAreaElement>("draft");
const fetchButton = el<HTMLButtonElement>("fetch");
const exportButton = el<HTMLButtonElement>("export");
const overlayPane = el<HTMLDivElement>("overlay");
const listPane = el<HTMLDivElement>("suggestions");
const previewPane = el<HTMLPreElement>("preview");
const errorBanner = el<HTMLDivElement>("error");
const warningsPane = el<HTMLDivElement>("warnings");

function renderOverlay(state: ReviewState): void {
  overlayPane.replaceChildren();
  if (state.suggestedFor === null || suggestionsStale(state)) {
    overlayPane.textContent = state.draft;
    return;
  }
  for (const segment of overlaySegments(state.suggestedFor, state.suggestions)) {
    if (!segment.suggestion) {
      overlayPane.append(document.createTextNode(segment.text));
      continue;
    }
    const s = segment.suggestion;
    const mark = document.createElement("mark");
    mark.textContent = segment.text;
    mark.className = `sugg sugg-${s.format} conf-${confidenceBucket(s.confidence)} ${
      state.decisions[s.id] ?? "pending"
    }`;
    mark.title = `${s.format} ${(s.confidence * 100).toFixed(1)}%${s.note ? ` (${s.note})` : ""}`;
    mark.addEventListener("click", () => void controller.toggle(s.id));
    overlayPane.append(mark);
  }
}

function renderList(state: ReviewState): void {
  listPane.replaceChildren();
  for (const s of state.suggestions) {
    const row = document.createElement("div");
    row.className = `row ${state.decisions[s.id] ?? "pending"}`;
    const badge = document.createElement("span");
    badge.className = `badge conf-${confidenceBucket(s.confidence)}`;
    badge.textContent = `${s.format} ${(s.confidence * 100).toFixed(1)}%`;
    const content = document.createElement("code");
    content.textContent = s.content;
    const button = document.createElement("button");
    button.textContent = state.decisions[s.id] === "accepted" ? "reject" : "accept";
    button.addEventListener("click", () => void controller.toggle(s.id));
    row.append(badge, content, button);
    if (s.note) {
      const note = document.createElement("em");
      note.textContent = s.note;
      row.append(note);
    }
    listPane.append(row);
  }
}

function render(state: ReviewState): void {
  errorBanner.textContent = state.error ?? "";
  errorBanner.hidden = !state.error;
  warningsPane.textContent = state.parserWarnings.join("; ");
  previewPane.textContent = state.preview;
  fetchButton.disabled = state.loading;
  fetchButton.textContent = state.loading ? "fetching…" : "Get suggestions";
  renderOverlay(state);
  renderList(state);
}

draftInput.addEventListener("input", () => controller.setDraft(draftInput.value));
fetchButton.addEventListener("click", () => void controller.fetchSuggestions());
exportButton.addEventListener("click", () => {
  const markdown = controller.exportMarkdown();
  const blob = new Blob([markdown], { type: "text/markdown;charset=utf-8" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "draft.md";
  link.click();
  URL.revokeObjectURL(link.href);
});

controller.subscribe(render);
