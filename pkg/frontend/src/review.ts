/** Pure review-state helpers for highlighted change spans.
 *
 * The UI only tracks per-span accept/reject choices; the final text is
 * always produced by the server's /local/apply endpoint.
 */

import type { Decision, SpanDoc } from "./types.js";

export type ReviewPiece =
  | { type: "text"; text: string }
  | { type: "span"; span: SpanDoc };

/** Interleave unchanged input slices with the change spans, in offset order. */
export function reviewPieces(input: string, spans: SpanDoc[]): ReviewPiece[] {
  const ordered = [...spans].sort(
    (a, b) => a.original_offset - b.original_offset || a.index - b.index,
  );
  const pieces: ReviewPiece[] = [];
  let pos = 0;
  for (const span of ordered) {
    if (span.original_offset > pos) {
      pieces.push({ type: "text", text: input.slice(pos, span.original_offset) });
    }
    pieces.push({ type: "span", span });
    pos = span.original_offset + span.original_text.length;
  }
  if (pos < input.length) {
    pieces.push({ type: "text", text: input.slice(pos) });
  }
  return pieces;
}

export function initialDecisions(spans: SpanDoc[]): Map<number, Decision> {
  return new Map(spans.map((span) => [span.index, "accept"]));
}

export function toggleDecision(decisions: Map<number, Decision>, index: number): void {
  decisions.set(index, decisions.get(index) === "accept" ? "reject" : "accept");
}

export function setAll(decisions: Map<number, Decision>, value: Decision): void {
  for (const key of decisions.keys()) decisions.set(key, value);
}

export function decisionsPayload(decisions: Map<number, Decision>): Record<string, Decision> {
  const payload: Record<string, Decision> = {};
  for (const [index, decision] of decisions) payload[String(index)] = decision;
  return payload;
}
