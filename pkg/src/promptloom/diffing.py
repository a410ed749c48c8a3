"""Minimal character-level edit scripts between input text and model output.

compute_diff implements the greedy O(ND) shortest-edit-script algorithm over
Unicode scalar values (so multi-byte characters are never split), with common
prefix/suffix trimming. The output is normalized so each changed run lists
its deletion before its insertion, which makes the script canonical: the same
input pair always yields the same segments.

coalesce_spans groups adjacent changed segments into user-decidable spans
(insertion, deletion, or replacement), and apply_decisions realizes a per-span
accept/reject choice into final text.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .errors import PromptLoomError
from .model import InsertionMode


class SegmentKind(str, Enum):
    EQUAL = "equal"
    INSERT = "insert"
    DELETE = "delete"


class SpanKind(str, Enum):
    INSERTION = "insertion"
    DELETION = "deletion"
    REPLACEMENT = "replacement"


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class DiffSegment:
    kind: SegmentKind
    text: str


@dataclass(frozen=True)
class ChangeSpan:
    """One contiguous change a user can accept or reject."""

    index: int
    kind: SpanKind
    original_text: str
    revised_text: str
    original_offset: int
    revised_offset: int


@dataclass(frozen=True)
class DecisionSet:
    """Accept/reject choice per span index; must cover every span exactly once."""

    decisions: Mapping[int, Decision]

    @classmethod
    def accept_all(cls, spans: Iterable[ChangeSpan]) -> DecisionSet:
        return cls({span.index: Decision.ACCEPT for span in spans})

    @classmethod
    def reject_all(cls, spans: Iterable[ChangeSpan]) -> DecisionSet:
        return cls({span.index: Decision.REJECT for span in spans})


class MissingDecisionError(PromptLoomError):
    """apply_decisions was called without a decision for every span."""


def _common_prefix_len(a: str, b: str) -> int:
    limit = min(len(a), len(b))
    i = 0
    while i < limit and a[i] == b[i]:
        i += 1
    return i


def _common_suffix_len(a: str, b: str) -> int:
    limit = min(len(a), len(b))
    i = 0
    while i < limit and a[len(a) - 1 - i] == b[len(b) - 1 - i]:
        i += 1
    return i


_EQ, _DEL, _INS = 0, 1, 2


def _shortest_edit_ops(a: str, b: str) -> list[tuple[int, str]]:
    """Greedy forward pass plus backtrack; returns (op, char) steps in order."""
    n, m = len(a), len(b)
    max_d = n + m
    offset = max_d + 1
    size = 2 * max_d + 3
    v = [0] * size
    trace: list[list[int]] = []

    depth = 0
    done = False
    for d in range(max_d + 1):
        trace.append(v.copy())
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[offset + k - 1] < v[offset + k + 1]):
                x = v[offset + k + 1]
            else:
                x = v[offset + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[offset + k] = x
            if x >= n and y >= m:
                depth = d
                done = True
                break
        if done:
            break

    rev_ops: list[tuple[int, str]] = []
    x, y = n, m
    for d in range(depth, 0, -1):
        vprev = trace[d]
        k = x - y
        if k == -d or (k != d and vprev[offset + k - 1] < vprev[offset + k + 1]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = vprev[offset + prev_k]
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            x -= 1
            y -= 1
            rev_ops.append((_EQ, a[x]))
        if prev_k == k + 1:
            rev_ops.append((_INS, b[prev_y]))
        else:
            rev_ops.append((_DEL, a[prev_x]))
        x, y = prev_x, prev_y
    while x > 0 and y > 0:
        x -= 1
        y -= 1
        rev_ops.append((_EQ, a[x]))
    rev_ops.reverse()
    return rev_ops


def _normalize(raw: list[tuple[int, str]]) -> list[DiffSegment]:
    """Merge runs; within each changed run emit the deletion before the insertion."""
    segments: list[DiffSegment] = []
    run_del: list[str] = []
    run_ins: list[str] = []

    def flush() -> None:
        if run_del:
            segments.append(DiffSegment(SegmentKind.DELETE, "".join(run_del)))
            run_del.clear()
        if run_ins:
            segments.append(DiffSegment(SegmentKind.INSERT, "".join(run_ins)))
            run_ins.clear()

    for op, text in raw:
        if not text:
            continue
        if op == _EQ:
            flush()
            if segments and segments[-1].kind is SegmentKind.EQUAL:
                segments[-1] = DiffSegment(SegmentKind.EQUAL, segments[-1].text + text)
            else:
                segments.append(DiffSegment(SegmentKind.EQUAL, text))
        elif op == _DEL:
            run_del.append(text)
        else:
            run_ins.append(text)
    flush()
    return segments


def compute_diff(original: str, revised: str) -> list[DiffSegment]:
    """Minimal edit script; insert+delete length equals the LCS edit cost."""
    if original == revised:
        return [DiffSegment(SegmentKind.EQUAL, original)] if original else []

    prefix = _common_prefix_len(original, revised)
    suffix = _common_suffix_len(original[prefix:], revised[prefix:])
    core_a = original[prefix : len(original) - suffix]
    core_b = revised[prefix : len(revised) - suffix]

    ops: list[tuple[int, str]] = []
    if prefix:
        ops.append((_EQ, original[:prefix]))
    if not core_a:
        ops.append((_INS, core_b))
    elif not core_b:
        ops.append((_DEL, core_a))
    else:
        ops.extend(_shortest_edit_ops(core_a, core_b))
    if suffix:
        ops.append((_EQ, original[len(original) - suffix :]))
    return _normalize(ops)


def edit_cost(segments: Iterable[DiffSegment]) -> int:
    """Total inserted plus deleted characters."""
    return sum(len(s.text) for s in segments if s.kind is not SegmentKind.EQUAL)


def coalesce_spans(segments: Iterable[DiffSegment]) -> list[ChangeSpan]:
    """Group each maximal run of non-equal segments into one decidable span."""
    spans: list[ChangeSpan] = []
    orig_pos = 0
    rev_pos = 0
    run_del: list[str] = []
    run_ins: list[str] = []
    run_orig_off = 0
    run_rev_off = 0

    def flush() -> None:
        if not run_del and not run_ins:
            return
        original_text = "".join(run_del)
        revised_text = "".join(run_ins)
        if original_text and revised_text:
            kind = SpanKind.REPLACEMENT
        elif original_text:
            kind = SpanKind.DELETION
        else:
            kind = SpanKind.INSERTION
        spans.append(
            ChangeSpan(
                index=len(spans),
                kind=kind,
                original_text=original_text,
                revised_text=revised_text,
                original_offset=run_orig_off,
                revised_offset=run_rev_off,
            )
        )
        run_del.clear()
        run_ins.clear()

    for segment in segments:
        if not segment.text:
            continue
        if segment.kind is SegmentKind.EQUAL:
            flush()
            orig_pos += len(segment.text)
            rev_pos += len(segment.text)
            continue
        if not run_del and not run_ins:
            run_orig_off = orig_pos
            run_rev_off = rev_pos
        if segment.kind is SegmentKind.DELETE:
            run_del.append(segment.text)
            orig_pos += len(segment.text)
        else:
            run_ins.append(segment.text)
            rev_pos += len(segment.text)
    flush()
    return spans


def apply_decisions(original: str, spans: list[ChangeSpan], decisions: DecisionSet) -> str:
    """Substitute accepted spans, keep rejected ones, in one left-to-right pass."""
    missing = sorted(s.index for s in spans if s.index not in decisions.decisions)
    if missing:
        raise MissingDecisionError(f"missing decision for span index(es) {missing}")
    parts: list[str] = []
    pos = 0
    for span in sorted(spans, key=lambda s: (s.original_offset, s.index)):
        parts.append(original[pos : span.original_offset])
        if decisions.decisions[span.index] is Decision.ACCEPT:
            parts.append(span.revised_text)
        else:
            parts.append(span.original_text)
        pos = span.original_offset + len(span.original_text)
    parts.append(original[pos:])
    return "".join(parts)


def diff_for_insertion_mode(
    input_text: str, parsed_output: str, mode: InsertionMode
) -> list[ChangeSpan]:
    """Replace mode diffs output against input; append mode is one insertion at the end."""
    if InsertionMode(mode) is InsertionMode.APPEND:
        return [
            ChangeSpan(
                index=0,
                kind=SpanKind.INSERTION,
                original_text="",
                revised_text="\n" + parsed_output,
                original_offset=len(input_text),
                revised_offset=len(input_text),
            )
        ]
    return coalesce_spans(compute_diff(input_text, parsed_output))
