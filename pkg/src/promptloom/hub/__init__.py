"""Community prompt hub: service, storage, HTTP API, and client."""
