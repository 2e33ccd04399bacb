/**
 * Unicode code-point offset handling.
 *
 * The service reports character ranges as code-point offsets into the
 * submitted draft, while JavaScript strings index UTF-16 units. Every
 * slice of the draft must go through these converters or astral-plane
 * characters (emoji, rare CJK) shift the overlays.
 */

/** UTF-16 index of the code point at `cpIndex` (equal to the string
 * length when cpIndex equals the code-point count). */
export function codePointToUtf16(text: string, cpIndex: number): number {
  if (cpIndex < 0) throw new RangeError(`negative code-point index ${cpIndex}`);
  let utf16 = 0;
  let cp = 0;
  for (const ch of text) {
    if (cp === cpIndex) return utf16;
    utf16 += ch.length;
    cp += 1;
  }
  if (cp === cpIndex) return utf16;
  throw new RangeError(`code-point index ${cpIndex} beyond end (${cp})`);
}

/** Number of code points in the string. */
export function codePointLength(text: string): number {
  let n = 0;
  for (const _ of text) n += 1;
  return n;
}

/** Slice by code-point offsets, half-open [start, end). */
export function sliceByCodePoints(text: string, start: number, end: number): string {
  if (end < start) throw new RangeError(`end ${end} < start ${start}`);
  return text.slice(codePointToUtf16(text, start), codePointToUtf16(text, end));
}
