"""Regex-based output parsing applied to raw model output before display.

Rules are anchored full matches with dot-matches-newline, so a pattern like
``.*<output>(.*)</output>.*`` strips surrounding chatter even when the model
adds it on separate lines. A non-matching rule passes the raw text through
unchanged; parsing never blocks the pipeline.

Supported dialect: the portable common subset (character classes,
alternation, greedy/lazy quantifiers, capture groups). Backreferences in the
pattern are rejected. Replacements understand ``$1``..``$9`` and ``$$`` for a
literal dollar; anything else after ``$`` is literal text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .model import ParsingRule, ValidationResult


@dataclass(frozen=True)
class ParseOutcome:
    text: str
    matched: bool


@lru_cache(maxsize=256)
def _compile(pattern: str) -> re.Pattern[str]:
    return re.compile(pattern, re.DOTALL)


def _scan_backreferences(pattern: str) -> list[str]:
    """Flag \\1..\\9 and (?P=name) outside character classes."""
    violations: list[str] = []
    in_class = False
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "\\" and i + 1 < len(pattern):
            nxt = pattern[i + 1]
            if not in_class and nxt in "123456789":
                violations.append(f"backreference \\{nxt} at position {i} is not supported")
            i += 2
            continue
        if not in_class and ch == "[":
            in_class = True
        elif in_class and ch == "]":
            in_class = False
        elif not in_class and pattern.startswith("(?P=", i):
            violations.append(f"named backreference at position {i} is not supported")
        i += 1
    return violations


def _replacement_group_refs(replacement: str) -> list[tuple[int, int]]:
    """(position, group number) for each $N reference in the replacement."""
    refs: list[tuple[int, int]] = []
    i = 0
    while i < len(replacement):
        if replacement[i] == "$" and i + 1 < len(replacement):
            nxt = replacement[i + 1]
            if nxt == "$":
                i += 2
                continue
            if nxt in "123456789":
                refs.append((i, int(nxt)))
                i += 2
                continue
        i += 1
    return refs


def validate_rule(rule: ParsingRule) -> ValidationResult:
    """Ok iff the pattern compiles and the replacement references only existing groups."""
    violations: list[str] = []
    compiled: re.Pattern[str] | None = None
    try:
        compiled = _compile(rule.pattern)
    except re.error as exc:
        pos = 0 if exc.pos is None else exc.pos
        if "unterminated subpattern" in exc.msg:
            violations.append(f"unclosed group at position {pos}")
        else:
            violations.append(f"{exc.msg} at position {pos}")
    violations.extend(_scan_backreferences(rule.pattern))
    if compiled is not None:
        for pos, group in _replacement_group_refs(rule.replacement):
            if group > compiled.groups:
                violations.append(f"replacement references missing group {group}")
    return ValidationResult(tuple(violations))


def _expand(replacement: str, match: re.Match[str]) -> str:
    parts: list[str] = []
    i = 0
    while i < len(replacement):
        ch = replacement[i]
        if ch == "$" and i + 1 < len(replacement):
            nxt = replacement[i + 1]
            if nxt == "$":
                parts.append("$")
                i += 2
                continue
            if nxt in "123456789":
                # A group that exists but did not participate expands to "".
                parts.append(match.group(int(nxt)) or "")
                i += 2
                continue
        parts.append(ch)
        i += 1
    return "".join(parts)


def parse_output(raw: str, rule: ParsingRule | None) -> ParseOutcome:
    """Apply an optional parsing rule; non-matches return the raw text untouched."""
    if rule is None:
        return ParseOutcome(raw, False)
    result = validate_rule(rule)
    if not result.ok:
        raise ValueError(f"invalid parsing rule: {'; '.join(result.violations)}")
    match = _compile(rule.pattern).fullmatch(raw)
    if match is None:
        return ParseOutcome(raw, False)
    return ParseOutcome(_expand(rule.replacement, match), True)
