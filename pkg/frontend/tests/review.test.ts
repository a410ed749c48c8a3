import { describe, expect, it } from "vitest";

import {
  decisionsPayload,
  initialDecisions,
  reviewPieces,
  setAll,
  toggleDecision,
} from "../src/review.js";
import type { SpanDoc } from "../src/types.js";

const replacement: SpanDoc = {
  index: 0,
  kind: "replacement",
  original_text: "cat",
  revised_text: "dog",
  original_offset: 4,
  revised_offset: 4,
};

const tailInsertion: SpanDoc = {
  index: 1,
  kind: "insertion",
  original_text: "",
  revised_text: "!",
  original_offset: 7,
  revised_offset: 7,
};

describe("reviewPieces", () => {
  it("interleaves unchanged text with spans", () => {
    const pieces = reviewPieces("the cat", [replacement, tailInsertion]);
    expect(pieces).toEqual([
      { type: "text", text: "the " },
      { type: "span", span: replacement },
      { type: "span", span: tailInsertion },
    ]);
  });

  it("keeps trailing text after the last span", () => {
    const deletion: SpanDoc = {
      index: 0,
      kind: "deletion",
      original_text: "very ",
      revised_text: "",
      original_offset: 0,
      revised_offset: 0,
    };
    expect(reviewPieces("very end", [deletion])).toEqual([
      { type: "span", span: deletion },
      { type: "text", text: "end" },
    ]);
  });

  it("orders spans by offset", () => {
    const pieces = reviewPieces("the cat", [tailInsertion, replacement]);
    expect(pieces.map((p) => p.type)).toEqual(["text", "span", "span"]);
  });
});

describe("decisions", () => {
  it("starts with everything accepted", () => {
    const decisions = initialDecisions([replacement, tailInsertion]);
    expect(decisionsPayload(decisions)).toEqual({ "0": "accept", "1": "accept" });
  });

  it("toggle flips a single span", () => {
    const decisions = initialDecisions([replacement, tailInsertion]);
    toggleDecision(decisions, 0);
    expect(decisionsPayload(decisions)).toEqual({ "0": "reject", "1": "accept" });
    toggleDecision(decisions, 0);
    expect(decisionsPayload(decisions)["0"]).toBe("accept");
  });

  it("setAll rewrites every decision", () => {
    const decisions = initialDecisions([replacement, tailInsertion]);
    setAll(decisions, "reject");
    expect(decisionsPayload(decisions)).toEqual({ "0": "reject", "1": "reject" });
  });
});
