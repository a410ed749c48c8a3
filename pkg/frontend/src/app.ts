/** Editor application: plain-text editing, a floating toolbar bound to the
 * three favorite slots, click-to-accept/reject review of model changes,
 * library and hub panels, and a prompt viewer reachable via ?prompt=<id>.
 *
 * All text transformations happen server-side; this component only renders
 * state and forwards decisions to /local/apply.
 */

import { ApiClient, ApiError } from "./api.js";
import { resolveInput, type ResolvedInput } from "./input.js";
import {
  decisionsPayload,
  initialDecisions,
  reviewPieces,
  setAll,
  toggleDecision,
} from "./review.js";
import type { Decision, HubEntryDoc, PromptDoc, RunResultDoc, SlotState } from "./types.js";

const DOCUMENT_KEY = "promptloom.document";

interface PendingReview {
  run: RunResultDoc;
  range: ResolvedInput;
  decisions: Map<number, Decision>;
}

const SHELL_TEMPLATE = `
  <div data-role="offline-banner" class="banner hidden">Local API unreachable — start <code>promptloom serve</code> and reload.</div>
  <div data-role="toast" class="toast hidden"></div>
  <main class="editor-main">
    <textarea data-role="editor" placeholder="Type or paste text, select some, then fire a prompt from the toolbar."></textarea>
    <div data-role="review" class="review hidden">
      <div data-role="review-text" class="review-text"></div>
      <div class="review-controls">
        <button data-role="accept-all">Accept all</button>
        <button data-role="reject-all">Reject all</button>
        <button data-role="apply">Apply decisions</button>
        <button data-role="cancel-review">Cancel</button>
      </div>
    </div>
  </main>
  <aside class="toolbar" data-role="toolbar">
    <button data-slot="0" class="slot-button" title="favorite slot 1">·</button>
    <button data-slot="1" class="slot-button" title="favorite slot 2">·</button>
    <button data-slot="2" class="slot-button" title="favorite slot 3">·</button>
    <button data-role="home" class="home-button" title="library &amp; hub">🏠</button>
  </aside>
  <section data-role="home-panel" class="home-panel hidden">
    <nav class="tabs">
      <button data-tab="library" class="active">Library</button>
      <button data-tab="hub">Hub</button>
      <button data-tab="models">Models</button>
    </nav>
    <div data-tab-panel="library">
      <div class="panel-controls">
        <input data-role="library-search" placeholder="search prompts" />
        <select data-role="library-sort">
          <option value="name">name</option>
          <option value="recency">recency</option>
          <option value="run_count">run count</option>
        </select>
      </div>
      <ul data-role="library-cards" class="cards"></ul>
      <div class="slot-row" data-role="slot-row"></div>
    </div>
    <div data-tab-panel="hub" class="hidden">
      <div class="panel-controls">
        <div data-role="hub-tags" class="tag-chips"></div>
        <select data-role="hub-sort">
          <option value="new">new</option>
          <option value="popular">popular</option>
        </select>
      </div>
      <ul data-role="hub-cards" class="cards"></ul>
    </div>
    <div data-tab-panel="models" class="hidden">
      <ul data-role="model-list" class="cards"></ul>
    </div>
  </section>
  <div data-role="viewer" class="viewer hidden">
    <div class="viewer-card">
      <header>
        <span data-role="viewer-icon"></span>
        <h2 data-role="viewer-title"></h2>
      </header>
      <p data-role="viewer-description"></p>
      <pre data-role="viewer-template"></pre>
      <p data-role="viewer-models"></p>
      <div data-role="viewer-tags" class="tag-chips"></div>
      <div class="viewer-controls">
        <button data-role="viewer-copy">Copy to library</button>
        <button data-role="viewer-close">Close</button>
      </div>
    </div>
  </div>
`;

export interface AppOptions {
  root: HTMLElement;
  api: ApiClient;
  storage?: Storage;
  searchParams?: URLSearchParams;
}

export class App {
  readonly root: HTMLElement;
  readonly api: ApiClient;
  private readonly storage: Storage | null;
  private readonly searchParams: URLSearchParams;

  pending: PendingReview | null = null;
  private runInFlight = false;
  private slots: SlotState = [null, null, null];
  private slotPrompts: (PromptDoc | null)[] = [null, null, null];
  private viewerEntry: HubEntryDoc | null = null;
  private hubTag: string | null = null;
  private opChain: Promise<unknown> = Promise.resolve();

  constructor(options: AppOptions) {
    this.root = options.root;
    this.api = options.api;
    this.storage = options.storage ?? globalThis.localStorage ?? null;
    this.searchParams =
      options.searchParams ??
      new URLSearchParams(globalThis.location ? globalThis.location.search : "");
    this.root.innerHTML = SHELL_TEMPLATE;
    this.wireEvents();
  }

  static async boot(options: AppOptions): Promise<App> {
    const app = new App(options);
    await app.initialize();
    return app;
  }

  // -- element access -------------------------------------------------------

  el<T extends HTMLElement>(selector: string): T {
    const found = this.root.querySelector(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found as T;
  }

  get editor(): HTMLTextAreaElement {
    return this.el<HTMLTextAreaElement>('[data-role="editor"]');
  }

  get documentText(): string {
    return this.editor.value;
  }

  // -- lifecycle -------------------------------------------------------------

  private track<T>(operation: Promise<T>): Promise<T> {
    this.opChain = operation.catch(() => undefined);
    return operation;
  }

  /** Wait for in-flight handlers; test helper. */
  async whenIdle(): Promise<void> {
    let previous: Promise<unknown>;
    do {
      previous = this.opChain;
      await previous;
    } while (previous !== this.opChain);
  }

  private async initialize(): Promise<void> {
    const saved = this.storage?.getItem(DOCUMENT_KEY);
    if (saved) this.editor.value = saved;
    try {
      await this.refreshSlots();
      await this.refreshLibrary();
      await this.refreshModels();
    } catch (error) {
      this.el('[data-role="offline-banner"]').classList.remove("hidden");
      console.warn("initial load failed", error);
      return;
    }
    const deepLink = this.searchParams.get("prompt");
    if (deepLink) {
      await this.openViewer(deepLink).catch((error) =>
        this.toast(`could not open prompt: ${describe(error)}`),
      );
    }
  }

  private wireEvents(): void {
    this.editor.addEventListener("input", () => {
      this.storage?.setItem(DOCUMENT_KEY, this.editor.value);
    });
    for (const button of this.root.querySelectorAll<HTMLButtonElement>("[data-slot]")) {
      button.addEventListener("click", () =>
        this.track(this.fireSlot(Number(button.dataset.slot))),
      );
    }
    this.el('[data-role="home"]').addEventListener("click", () => {
      this.el('[data-role="home-panel"]').classList.toggle("hidden");
    });
    for (const tab of this.root.querySelectorAll<HTMLButtonElement>("[data-tab]")) {
      tab.addEventListener("click", () => this.showTab(tab.dataset.tab ?? "library"));
    }
    this.el('[data-role="review-text"]').addEventListener("click", (event) => {
      const mark = (event.target as HTMLElement).closest("[data-span-index]");
      if (mark && this.pending) {
        toggleDecision(this.pending.decisions, Number((mark as HTMLElement).dataset.spanIndex));
        this.renderReview();
      }
    });
    this.el('[data-role="accept-all"]').addEventListener("click", () =>
      this.track(this.decideAll("accept")),
    );
    this.el('[data-role="reject-all"]').addEventListener("click", () =>
      this.track(this.decideAll("reject")),
    );
    this.el('[data-role="apply"]').addEventListener("click", () =>
      this.track(this.applyDecisions()),
    );
    this.el('[data-role="cancel-review"]').addEventListener("click", () => this.exitReview());
    this.el('[data-role="library-search"]').addEventListener("input", () =>
      this.track(this.refreshLibrary()),
    );
    this.el('[data-role="library-sort"]').addEventListener("change", () =>
      this.track(this.refreshLibrary()),
    );
    this.el('[data-role="hub-sort"]').addEventListener("change", () =>
      this.track(this.refreshHub()),
    );
    this.el('[data-role="viewer-close"]').addEventListener("click", () => {
      this.el('[data-role="viewer"]').classList.add("hidden");
      this.viewerEntry = null;
    });
    this.el('[data-role="viewer-copy"]').addEventListener("click", () =>
      this.track(this.copyViewerEntry()),
    );
  }

  private showTab(name: string): void {
    for (const tab of this.root.querySelectorAll<HTMLButtonElement>("[data-tab]")) {
      tab.classList.toggle("active", tab.dataset.tab === name);
    }
    for (const panel of this.root.querySelectorAll<HTMLElement>("[data-tab-panel]")) {
      panel.classList.toggle("hidden", panel.dataset.tabPanel !== name);
    }
    if (name === "hub") void this.track(this.refreshHub());
  }

  toast(message: string): void {
    const toast = this.el('[data-role="toast"]');
    toast.textContent = message;
    toast.classList.remove("hidden");
    setTimeout(() => toast.classList.add("hidden"), 4000);
  }

  // -- running prompts --------------------------------------------------------

  async fireSlot(slot: number): Promise<void> {
    return this.runPrompt(`slot:${slot}`);
  }

  async runPrompt(promptRef: string): Promise<void> {
    if (this.runInFlight || this.pending) {
      this.toast("a run is already in progress");
      return;
    }
    const resolved = resolveInput(
      this.documentText,
      this.editor.selectionStart ?? 0,
      this.editor.selectionEnd ?? 0,
    );
    if (!resolved) {
      this.toast("document is empty");
      return;
    }
    this.setToolbarEnabled(false);
    this.runInFlight = true;
    try {
      const run = await this.api.run(promptRef, resolved.text);
      if (run.spans.length === 0) {
        this.toast("no changes");
        return;
      }
      this.pending = { run, range: resolved, decisions: initialDecisions(run.spans) };
      this.enterReview();
    } catch (error) {
      this.toast(`run failed: ${describe(error)}`);
    } finally {
      this.runInFlight = false;
      this.setToolbarEnabled(true);
    }
  }

  private setToolbarEnabled(enabled: boolean): void {
    for (const button of this.root.querySelectorAll<HTMLButtonElement>("[data-slot]")) {
      button.disabled = !enabled;
    }
  }

  // -- review mode -------------------------------------------------------------

  private enterReview(): void {
    this.editor.classList.add("hidden");
    this.el('[data-role="review"]').classList.remove("hidden");
    this.renderReview();
  }

  private exitReview(): void {
    this.pending = null;
    this.el('[data-role="review"]').classList.add("hidden");
    this.editor.classList.remove("hidden");
  }

  renderReview(): void {
    if (!this.pending) return;
    const { run, range, decisions } = this.pending;
    const container = this.el('[data-role="review-text"]');
    container.textContent = "";
    const doc = this.root.ownerDocument;
    container.append(doc.createTextNode(this.documentText.slice(0, range.start)));
    for (const piece of reviewPieces(run.input, run.spans)) {
      if (piece.type === "text") {
        container.append(doc.createTextNode(piece.text));
        continue;
      }
      const mark = doc.createElement("mark");
      mark.dataset.spanIndex = String(piece.span.index);
      const decision = decisions.get(piece.span.index) ?? "accept";
      mark.className = `span-${piece.span.kind} decision-${decision}`;
      if (piece.span.original_text) {
        const original = doc.createElement("del");
        original.textContent = piece.span.original_text;
        mark.append(original);
      }
      if (piece.span.revised_text) {
        const revised = doc.createElement("ins");
        revised.textContent = piece.span.revised_text;
        mark.append(revised);
      }
      container.append(mark);
    }
    container.append(doc.createTextNode(this.documentText.slice(range.end)));
  }

  private async decideAll(decision: Decision): Promise<void> {
    if (!this.pending) return;
    setAll(this.pending.decisions, decision);
    await this.applyDecisions();
  }

  async applyDecisions(): Promise<void> {
    if (!this.pending) return;
    const { run, range, decisions } = this.pending;
    const applied = await this.api.apply(run.input, run.spans, decisionsPayload(decisions));
    const text = this.documentText;
    this.editor.value = text.slice(0, range.start) + applied.text + text.slice(range.end);
    this.storage?.setItem(DOCUMENT_KEY, this.editor.value);
    this.exitReview();
    this.toast("changes applied");
  }

  // -- library panel --------------------------------------------------------------

  async refreshSlots(): Promise<void> {
    const { favorite_slots } = await this.api.slots();
    this.slots = favorite_slots;
    this.slotPrompts = await Promise.all(
      favorite_slots.map((id) => (id ? this.api.libraryGet(id) : Promise.resolve(null))),
    );
    for (const button of this.root.querySelectorAll<HTMLButtonElement>("[data-slot]")) {
      const prompt = this.slotPrompts[Number(button.dataset.slot)];
      button.textContent = prompt ? prompt.icon : "·";
      button.title = prompt ? prompt.title : `favorite slot ${Number(button.dataset.slot) + 1}`;
    }
    this.renderSlotRow();
  }

  private renderSlotRow(): void {
    const row = this.el('[data-role="slot-row"]');
    row.textContent = "";
    const doc = this.root.ownerDocument;
    this.slots.forEach((id, slot) => {
      const zone = doc.createElement("div");
      zone.className = "slot-zone";
      zone.dataset.dropSlot = String(slot);
      const prompt = this.slotPrompts[slot];
      zone.textContent = prompt ? `${prompt.icon} ${prompt.title}` : `slot ${slot + 1}: empty`;
      zone.addEventListener("dragover", (event) => event.preventDefault());
      zone.addEventListener("drop", (event) => {
        event.preventDefault();
        const promptId = (event as DragEvent).dataTransfer?.getData("text/plain");
        if (promptId) void this.track(this.assignSlot(slot, promptId));
      });
      row.append(zone);
    });
  }

  async assignSlot(slot: number, promptId: string): Promise<void> {
    await this.api.setSlot(slot, promptId);
    await this.refreshSlots();
    this.toast(`assigned to slot ${slot + 1}`);
  }

  async refreshLibrary(): Promise<void> {
    const query = this.el<HTMLInputElement>('[data-role="library-search"]').value;
    const sort = this.el<HTMLSelectElement>('[data-role="library-sort"]').value;
    const { prompts } = await this.api.libraryList(query || undefined, sort);
    const list = this.el('[data-role="library-cards"]');
    list.textContent = "";
    const doc = this.root.ownerDocument;
    for (const prompt of prompts) {
      const card = doc.createElement("li");
      card.className = "card";
      card.dataset.promptId = prompt.id;
      card.draggable = true;
      card.addEventListener("dragstart", (event) => {
        (event as DragEvent).dataTransfer?.setData("text/plain", prompt.id);
      });

      const title = doc.createElement("span");
      title.className = "card-title";
      title.textContent = `${prompt.icon} ${prompt.title}`;
      const meta = doc.createElement("span");
      meta.className = "card-meta";
      meta.textContent = `runs: ${prompt.run_count}`;
      card.append(title, meta);

      for (let slot = 0; slot < 3; slot += 1) {
        const assign = doc.createElement("button");
        assign.dataset.assignSlot = String(slot);
        assign.textContent = `→${slot + 1}`;
        assign.title = `place in favorite slot ${slot + 1}`;
        assign.addEventListener("click", () => this.track(this.assignSlot(slot, prompt.id)));
        card.append(assign);
      }
      list.append(card);
    }
  }

  async refreshModels(): Promise<void> {
    const { models, default_model } = await this.api.models();
    const list = this.el('[data-role="model-list"]');
    list.textContent = "";
    const doc = this.root.ownerDocument;
    for (const model of models) {
      const item = doc.createElement("li");
      item.className = "card";
      const star = model.model_id === default_model ? " (default)" : "";
      item.textContent = `${model.model_id} — ${model.endpoint_kind}${star}`;
      list.append(item);
    }
  }

  // -- hub panel -----------------------------------------------------------------

  async refreshHub(): Promise<void> {
    const sort = this.el<HTMLSelectElement>('[data-role="hub-sort"]').value as
      | "new"
      | "popular";
    const [{ entries }, { tags }] = await Promise.all([
      this.api.hubList(this.hubTag ?? undefined, sort),
      this.api.hubTags(),
    ]);
    const doc = this.root.ownerDocument;

    const chips = this.el('[data-role="hub-tags"]');
    chips.textContent = "";
    for (const { tag, count } of tags) {
      const chip = doc.createElement("button");
      chip.className = "tag-chip" + (tag === this.hubTag ? " active" : "");
      chip.dataset.tag = tag;
      chip.textContent = `${tag} (${count})`;
      chip.addEventListener("click", () => {
        this.hubTag = this.hubTag === tag ? null : tag;
        void this.track(this.refreshHub());
      });
      chips.append(chip);
    }

    const list = this.el('[data-role="hub-cards"]');
    list.textContent = "";
    for (const entry of entries) {
      const card = doc.createElement("li");
      card.className = "card";
      card.dataset.hubId = entry.id;
      const title = doc.createElement("span");
      title.className = "card-title";
      title.textContent = `${entry.icon} ${entry.title}`;
      const meta = doc.createElement("span");
      meta.className = "card-meta";
      meta.textContent = `runs: ${entry.run_count} · ${entry.tags.join(", ")}`;
      card.append(title, meta);
      card.addEventListener("click", () => this.track(this.openViewer(entry.id)));
      list.append(card);
    }
  }

  // -- prompt viewer ----------------------------------------------------------------

  async openViewer(hubId: string): Promise<void> {
    const entry = await this.api.hubGet(hubId);
    this.viewerEntry = entry;
    this.el('[data-role="viewer-icon"]').textContent = entry.icon;
    this.el('[data-role="viewer-title"]').textContent = entry.title;
    this.el('[data-role="viewer-description"]').textContent = entry.description;
    this.el('[data-role="viewer-template"]').textContent = entry.template;
    this.el('[data-role="viewer-models"]').textContent = entry.recommended_models.length
      ? `recommended models: ${entry.recommended_models.join(", ")}`
      : "";
    const tags = this.el('[data-role="viewer-tags"]');
    tags.textContent = "";
    for (const tag of entry.tags) {
      const chip = this.root.ownerDocument.createElement("span");
      chip.className = "tag-chip";
      chip.textContent = tag;
      tags.append(chip);
    }
    this.el('[data-role="viewer"]').classList.remove("hidden");
  }

  async copyViewerEntry(): Promise<void> {
    if (!this.viewerEntry) return;
    try {
      const record = await this.api.hubPull(this.viewerEntry.id);
      this.toast(`copied "${record.title}" to library`);
      await this.refreshLibrary();
    } catch (error) {
      if (error instanceof ApiError && error.code === "duplicate") {
        this.toast("already in your library");
        return;
      }
      throw error;
    }
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return error.message;
  return String(error);
}
