"""Hub client over a live in-process server: pull, share, async run reports."""

from __future__ import annotations

import pytest

from promptloom.errors import DuplicatePromptError, NotFoundError, ValidationFailedError
from promptloom.hub.client import (
    HubClient,
    HubSession,
    HubUnavailableError,
    extract_prompt_id,
)
from promptloom.library import PromptLibrary
from promptloom.model import derive_prompt_id, new_prompt, record_to_dict

MISSING_ID = "b131cdb7-558e-5845-9b83-f877f5718b66"


def shareable(title="Improve flow", template="Improve: {{text}}"):
    return new_prompt(
        title,
        template,
        description="Rewrites text so it reads smoothly.",
        tags=("writing",),
    )


@pytest.fixture
def client(hub_server):
    with HubClient(HubSession(hub_server.base_url)) as hub_client:
        yield hub_client


class TestSessionAndRefs:
    def test_malformed_base_url_rejected(self):
        with pytest.raises(ValueError):
            HubSession("not a url")

    def test_extract_bare_id(self):
        assert extract_prompt_id(MISSING_ID) == MISSING_ID

    def test_extract_deep_link(self):
        url = f"https://host.example/app?prompt={MISSING_ID}"
        assert extract_prompt_id(url) == MISSING_ID

    def test_extract_deep_link_with_extra_params(self):
        url = f"https://host.example/app?lang=en&prompt={MISSING_ID}&x=1"
        assert extract_prompt_id(url) == MISSING_ID

    def test_extract_rejects_garbage(self):
        with pytest.raises(ValueError):
            extract_prompt_id("https://host.example/app?other=1")


class TestShareGetList:
    def test_share_then_get(self, client):
        entry_id = client.share(shareable())
        entry = client.get_entry(entry_id)
        assert entry.title == "Improve flow"
        assert entry.run_count == 0

    def test_share_invalid_surfaces_violations(self, client):
        record = new_prompt("T", "t", description="d", tags=())
        with pytest.raises(ValidationFailedError) as exc_info:
            client.share(record)
        assert any("tags must be non-empty" in v for v in exc_info.value.violations)

    def test_get_missing_raises_not_found(self, client):
        with pytest.raises(NotFoundError):
            client.get_entry(MISSING_ID)

    def test_list_and_tags(self, client):
        client.share(shareable())
        entries, cursor = client.list_entries(tag="writing", sort="popular")
        assert len(entries) == 1 and cursor is None
        assert client.top_tags() == [("writing", 1)]

    def test_unreachable_hub(self, tmp_path):
        session = HubSession("http://127.0.0.1:9", timeout=0.2, retry_budget=0)
        with HubClient(session) as client:
            with pytest.raises(HubUnavailableError):
                client.get_entry(MISSING_ID)


class TestPullToLibrary:
    def test_pull_sets_provenance(self, client, tmp_path):
        library = PromptLibrary(tmp_path / "lib")
        entry_id = client.share(shareable())
        record = client.pull_to_library(entry_id, library)
        assert record.source_hub_id == entry_id
        assert record.run_count == 0
        assert library.get_prompt(record.id).title == "Improve flow"

    def test_pull_twice_is_duplicate(self, client, tmp_path):
        library = PromptLibrary(tmp_path / "lib")
        entry_id = client.share(shareable())
        client.pull_to_library(entry_id, library)
        with pytest.raises(DuplicatePromptError):
            client.pull_to_library(entry_id, library)

    def test_pull_edit_reshare_changes_id(self, client, tmp_path):
        library = PromptLibrary(tmp_path / "lib")
        source_id = client.share(shareable())
        record = client.pull_to_library(source_id, library)
        edited = library.update_prompt(
            record.id,
            {"template": record.template + "\nMy input text is used in US corporate communications"},
        )
        new_hub_id = client.share(edited)
        assert new_hub_id != source_id
        assert new_hub_id == derive_prompt_id(edited)

    def test_pull_is_read_only_on_hub(self, client, hub_server, tmp_path):
        library = PromptLibrary(tmp_path / "lib")
        entry_id = client.share(shareable())
        client.pull_to_library(entry_id, library)
        assert hub_server.service.get(entry_id).run_count == 0


class TestRunReporting:
    def test_report_lands_on_hub(self, client, hub_server):
        entry_id = client.share(shareable())
        client.report_run_async(entry_id)
        assert client.flush_run_reports(timeout=5.0)
        assert hub_server.service.get(entry_id).run_count == 1

    def test_hub_down_never_raises(self):
        session = HubSession("http://127.0.0.1:9", timeout=0.2)
        with HubClient(session) as client:
            client.report_run_async(MISSING_ID)
            client.flush_run_reports(timeout=2.0)
        # reaching here without an exception is the contract

    def test_many_reports_all_land(self, client, hub_server):
        entry_id = client.share(shareable())
        for _ in range(20):
            client.report_run_async(entry_id)
        assert client.flush_run_reports(timeout=5.0)
        assert hub_server.service.get(entry_id).run_count == 20

    def test_library_wiring_reports_only_pulled_prompts(self, client, hub_server, tmp_path):
        library = PromptLibrary(tmp_path / "lib", run_reporter=client.report_run_async)
        entry_id = client.share(shareable())
        pulled = client.pull_to_library(entry_id, library)
        local_only = library.add_prompt(new_prompt("Local", "l"))

        library.record_run(pulled.id)
        library.record_run(local_only)
        client.flush_run_reports(timeout=5.0)

        assert hub_server.service.get(entry_id).run_count == 1

    def test_report_route_full_stack(self, client):
        entry_id = client.share(shareable())
        assert client.report(entry_id, "inappropriate") == 1
