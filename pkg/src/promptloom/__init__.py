"""Social prompt engineering toolkit.

Create, run, share, and discover LLM prompt templates: template rendering,
regex output parsing, minimal character diffs with per-change accept/reject,
a local prompt library, a community hub service and client, and a CLI that
also hosts the local HTTP API for the editor UI.
"""

__version__ = "0.1.0"
