/** Thin typed client for the local API served by the CLI. */

import type {
  Decision,
  HubEntryDoc,
  ModelDescriptorDoc,
  PromptDoc,
  RunResultDoc,
  SlotState,
  SpanDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (error) {
      throw new ApiError(0, "unreachable", `local API unreachable: ${String(error)}`);
    }
    if (!response.ok) {
      let code = `http-${response.status}`;
      let message = response.statusText;
      try {
        const payload = (await response.json()) as { code?: string; message?: string };
        code = payload.code ?? code;
        message = payload.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  run(promptRef: string, input: string, modelId?: string): Promise<RunResultDoc> {
    return this.request("POST", "/local/run", {
      prompt_id: promptRef,
      input,
      model_id: modelId,
    });
  }

  apply(
    input: string,
    spans: SpanDoc[],
    decisions: Record<string, Decision>,
  ): Promise<{ text: string }> {
    return this.request("POST", "/local/apply", { input, spans, decisions });
  }

  models(): Promise<{ models: ModelDescriptorDoc[]; default_model: string }> {
    return this.request("GET", "/local/models");
  }

  libraryList(q?: string, sort?: string): Promise<{ prompts: PromptDoc[] }> {
    const params = new URLSearchParams();
    if (q) params.set("q", q);
    if (sort) params.set("sort", sort);
    const query = params.toString();
    return this.request("GET", `/local/library/prompts${query ? "?" + query : ""}`);
  }

  libraryAdd(doc: Partial<PromptDoc>): Promise<{ id: string }> {
    return this.request("POST", "/local/library/prompts", doc);
  }

  libraryGet(id: string): Promise<PromptDoc> {
    return this.request("GET", `/local/library/prompts/${id}`);
  }

  libraryDelete(id: string): Promise<{ deleted: boolean }> {
    return this.request("DELETE", `/local/library/prompts/${id}`);
  }

  slots(): Promise<{ favorite_slots: SlotState }> {
    return this.request("GET", "/local/library/slots");
  }

  setSlot(slot: number, id: string | null): Promise<{ favorite_slots: SlotState }> {
    return this.request("PUT", `/local/library/slots/${slot}`, { id });
  }

  hubList(
    tag?: string,
    sort: "new" | "popular" = "new",
    limit = 20,
  ): Promise<{ entries: HubEntryDoc[]; next_cursor: string | null }> {
    const params = new URLSearchParams({ sort, limit: String(limit) });
    if (tag) params.set("tag", tag);
    return this.request("GET", `/local/hub/prompts?${params}`);
  }

  hubGet(id: string): Promise<HubEntryDoc> {
    return this.request("GET", `/local/hub/prompts/${id}`);
  }

  hubTags(limit = 10): Promise<{ tags: { tag: string; count: number }[] }> {
    return this.request("GET", `/local/hub/tags?limit=${limit}`);
  }

  hubPull(ref: string): Promise<PromptDoc> {
    return this.request("POST", "/local/hub/pull", { ref });
  }

  hubShare(id: string): Promise<{ id: string }> {
    return this.request("POST", "/local/hub/share", { id });
  }
}
