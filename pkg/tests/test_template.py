"""Placeholder substitution and append-fallback contract."""

from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from promptloom.template import PLACEHOLDER, RenderedPrompt, render_prompt


def test_substitutes_placeholder():
    rendered = render_prompt("Improve the flow of the following text: {{text}}", "Hello world")
    assert rendered == RenderedPrompt("Improve the flow of the following text: Hello world", True)


def test_appends_when_placeholder_absent():
    rendered = render_prompt("Fix grammar.", "helo wrld")
    assert rendered.text == "Fix grammar.\nhelo wrld"
    assert rendered.used_placeholder is False


def test_replaces_every_occurrence():
    rendered = render_prompt("{{text}} — {{text}}", "a")
    assert rendered.text == "a — a"


def test_empty_input_deletes_placeholder():
    rendered = render_prompt("before {{text}} after", "")
    assert rendered.text == "before  after"


# Literal chunks avoid braces so a placeholder can never re-form across a
# substitution seam; templates interleave them with explicit tokens.
literal_chunks = st.text(
    alphabet=st.characters(blacklist_characters="{}"), max_size=40
)
clean_templates = st.lists(literal_chunks, min_size=1, max_size=5).flatmap(
    lambda chunks: st.lists(
        st.booleans(), min_size=len(chunks) - 1, max_size=len(chunks) - 1
    ).map(
        lambda gaps: "".join(
            chunk + (PLACEHOLDER if gap else "")
            for chunk, gap in zip(chunks, list(gaps) + [False])
        )
    )
)
any_templates = st.text(max_size=120)
inputs = st.text(max_size=120)


@given(any_templates, inputs)
def test_substitution_contract(template, input_text):
    rendered = render_prompt(template, input_text)
    if PLACEHOLDER in template:
        assert rendered.used_placeholder
        assert rendered.text == template.replace(PLACEHOLDER, input_text)
    else:
        assert not rendered.used_placeholder
        assert rendered.text == template + "\n" + input_text


@given(clean_templates, inputs.filter(lambda s: PLACEHOLDER not in s))
def test_no_leftover_placeholder(template, input_text):
    rendered = render_prompt(template, input_text)
    assert PLACEHOLDER not in rendered.text


@given(any_templates, inputs)
def test_rendering_is_pure(template, input_text):
    assert render_prompt(template, input_text) == render_prompt(template, input_text)


@given(any_templates)
def test_empty_input_with_placeholder_removes_token(template):
    rendered = render_prompt(template + PLACEHOLDER, "")
    assert rendered.text == template.replace(PLACEHOLDER, "")


@given(any_templates, inputs)
def test_result_non_empty_when_either_side_is(template, input_text):
    if template or input_text:
        assert render_prompt(template, input_text).text
