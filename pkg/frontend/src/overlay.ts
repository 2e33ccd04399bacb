/**
 * Split a draft into plain and suggestion-covered segments for inline
 * display. Purely presentational: segmentation uses the exact code-point
 * ranges the service returned.
 */

import type { Suggestion } from "./api.js";
import { codePointLength, sliceByCodePoints } from "./offsets.js";

export interface OverlaySegment {
  text: string;
  suggestion: Suggestion | null;
}

export function overlaySegments(draft: string, suggestions: Suggestion[]): OverlaySegment[] {
  const ordered = [...suggestions].sort((a, b) => a.start - b.start);
  const segments: OverlaySegment[] = [];
  let cursor = 0;
  for (const s of ordered) {
    if (s.start < cursor) continue; // server guarantees disjoint ranges
    if (s.start > cursor) {
      segments.push({ text: sliceByCodePoints(draft, cursor, s.start), suggestion: null });
    }
    segments.push({ text: sliceByCodePoints(draft, s.start, s.end), suggestion: s });
    cursor = s.end;
  }
  const total = codePointLength(draft);
  if (cursor < total) {
    segments.push({ text: sliceByCodePoints(draft, cursor, total), suggestion: null });
  }
  return segments;
}
