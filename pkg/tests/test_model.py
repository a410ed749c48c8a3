"""Domain type validation, content-derived ids, and file-format round-trips."""

from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from promptloom.model import (
    PROMPT_ID_RE,
    EndpointKind,
    InsertionMode,
    ModelConfig,
    ParsingRule,
    derive_prompt_id,
    derive_prompt_id_from,
    loads_record,
    new_prompt,
    normalize_tags,
    dumps_record,
    record_from_dict,
    record_to_dict,
    validate_model_config,
    validate_prompt,
    visible_length,
)


def make_record(**overrides):
    base = dict(
        title="Improve flow",
        template="Improve the flow of the following text: {{text}}",
        description="Rewrites text so it reads smoothly.",
        tags=("writing",),
    )
    base.update(overrides)
    return new_prompt(base.pop("title"), base.pop("template"), **base)


class TestValidatePrompt:
    def test_valid_record_shareable(self):
        record = make_record()
        assert validate_prompt(record, for_sharing=True).ok

    def test_sharing_requires_tags(self):
        record = make_record(tags=())
        result = validate_prompt(record, for_sharing=True)
        assert "tags must be non-empty when sharing" in result.violations

    def test_sharing_requires_description(self):
        record = make_record(description=None)
        result = validate_prompt(record, for_sharing=True)
        assert "description must be non-empty when sharing" in result.violations

    def test_temperature_out_of_range(self):
        record = dataclasses.replace(make_record(), temperature=2.5)
        result = validate_prompt(record)
        assert "temperature out of range" in result.violations

    def test_blank_title_rejected(self):
        record = dataclasses.replace(make_record(), title="   ")
        assert "title must be non-empty" in validate_prompt(record).violations

    def test_negative_run_count_rejected(self):
        record = dataclasses.replace(make_record(), run_count=-1)
        assert not validate_prompt(record).ok

    def test_uppercase_tag_rejected(self):
        record = dataclasses.replace(make_record(), tags=("Writing",))
        assert not validate_prompt(record).ok

    def test_duplicate_tags_rejected(self):
        record = dataclasses.replace(make_record(), tags=("a", "a"))
        assert "tags must be deduplicated" in validate_prompt(record).violations

    def test_malformed_id_rejected(self):
        record = dataclasses.replace(make_record(), id="not-an-id")
        assert "id must match the 8-4-4-4-12 lowercase hex layout" in validate_prompt(record).violations

    def test_bad_parsing_rule_reported(self):
        record = dataclasses.replace(make_record(), parsing_rule=ParsingRule("(a", "$1"))
        result = validate_prompt(record)
        assert any(v.startswith("parsing_rule:") for v in result.violations)

    def test_ok_survives_run_count_increment(self):
        record = make_record()
        assert validate_prompt(record).ok
        bumped = dataclasses.replace(record, run_count=record.run_count + 1)
        assert validate_prompt(bumped).ok

    def test_oversized_icon_rejected(self):
        record = dataclasses.replace(make_record(), icon="abcde")
        assert not validate_prompt(record).ok

    def test_joined_emoji_counts_as_one_glyph(self):
        assert visible_length("👨‍👩‍👧‍👦") == 1
        assert visible_length("👍🏽") == 1
        assert visible_length("abcd") == 4
        record = dataclasses.replace(make_record(), icon="👨‍👩‍👧‍👦")
        assert validate_prompt(record).ok


class TestDeriveId:
    def test_layout(self):
        assert PROMPT_ID_RE.fullmatch(derive_prompt_id(make_record()))

    def test_deterministic_for_equal_content(self):
        a = make_record()
        b = make_record()
        assert derive_prompt_id(a) == derive_prompt_id(b)

    def test_single_character_change_changes_id(self):
        a = make_record()
        b = make_record(template=a.template + "!")
        assert derive_prompt_id(a) != derive_prompt_id(b)

    def test_stable_across_processes(self):
        # Frozen value: derivation must not drift between releases, or stored
        # content addresses would dangle.
        got = derive_prompt_id_from(
            "Improve the flow",
            "Improve the flow of the following text: {{text}}",
            None,
            InsertionMode.REPLACE,
        )
        assert got == "11c77834-bb08-5c7b-91b2-f40110cc2b28"

    def test_parsing_rule_participates(self):
        rule = ParsingRule(".*<output>(.*)</output>.*", "$1")
        with_rule = derive_prompt_id_from("t", "x", rule, InsertionMode.REPLACE)
        without = derive_prompt_id_from("t", "x", None, InsertionMode.REPLACE)
        assert with_rule != without

    def test_insertion_mode_participates(self):
        replace = derive_prompt_id_from("t", "x", None, InsertionMode.REPLACE)
        append = derive_prompt_id_from("t", "x", None, InsertionMode.APPEND)
        assert replace != append

    @given(st.text(min_size=1, max_size=40), st.text(max_size=200))
    def test_any_derived_id_matches_layout(self, title, template):
        derived = derive_prompt_id_from(title, template, None, InsertionMode.REPLACE)
        assert PROMPT_ID_RE.fullmatch(derived)


class TestSerialization:
    def test_round_trip_identity(self):
        record = make_record(
            parsing_rule=ParsingRule(".*<output>(.*)</output>.*", "$1"),
            recommended_models=("gpt-4", "stub"),
            source_hub_id=None,
        )
        assert record_from_dict(record_to_dict(record)) == record

    def test_text_round_trip(self):
        record = make_record()
        assert loads_record(dumps_record(record)) == record

    def test_field_names_match_contract(self):
        data = record_to_dict(make_record())
        assert set(data) == {
            "id",
            "title",
            "icon",
            "template",
            "temperature",
            "parsing_rule",
            "insertion_mode",
            "description",
            "tags",
            "recommended_models",
            "run_count",
            "created_at",
            "updated_at",
            "source_hub_id",
        }

    @given(
        title=st.text(min_size=1, max_size=30).filter(lambda s: s.strip()),
        template=st.text(max_size=120),
        description=st.one_of(st.none(), st.text(max_size=60)),
        temperature=st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
        mode=st.sampled_from(list(InsertionMode)),
    )
    def test_round_trip_property(self, title, template, description, temperature, mode):
        record = new_prompt(
            title,
            template,
            description=description,
            temperature=temperature,
            insertion_mode=mode,
            tags=("alpha", "beta-2"),
        )
        assert record_from_dict(record_to_dict(record)) == record


class TestTagNormalization:
    @pytest.mark.parametrize(
        "raw, expected",
        [
            (("Translation",), ("translation",)),
            (("Corporate Email",), ("corporate-email",)),
            (("a", "A", "a"), ("a",)),
            (("under_score", "--wild!--"), ("under-score", "wild")),
            (("",), ()),
        ],
    )
    def test_normalize(self, raw, expected):
        assert normalize_tags(raw) == expected

    def test_long_tags_truncated_to_limit(self):
        (tag,) = normalize_tags(("x" * 99,))
        assert len(tag) == 32


class TestModelConfig:
    def test_remote_requires_base_url(self):
        config = ModelConfig("gpt-4", EndpointKind.REMOTE_CHAT_API)
        assert "remote_chat_api requires base_url" in validate_model_config(config).violations

    def test_stub_forbids_base_url(self):
        config = ModelConfig(
            "stub", EndpointKind.SCRIPTED_STUB, base_url="https://example.test"
        )
        assert "scripted_stub forbids base_url" in validate_model_config(config).violations

    def test_valid_remote(self):
        config = ModelConfig(
            "gpt-4",
            EndpointKind.REMOTE_CHAT_API,
            base_url="https://api.example.test/v1",
            api_key_ref="EXAMPLE_API_KEY",
        )
        assert validate_model_config(config).ok
