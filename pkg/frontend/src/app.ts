/** Controller: wires the API client, store, panels, and keyboard together.
 *
 * Verdicts apply optimistically and are rolled back if the service refuses;
 * runIteration resolves only once the background pass has finished, so the
 * run button stays disabled for exactly as long as the service is busy.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Decision, QueueItem } from "./api.js";
import { bindKeyboard } from "./keyboard.js";
import { Store } from "./state.js";
import { buildSkeleton, renderAll } from "./ui.js";
import type { Refs, UiHandlers } from "./ui.js";

function newRequestId(): string {
  if (typeof crypto !== "undefined" && typeof crypto.randomUUID === "function") {
    return crypto.randomUUID();
  }
  return `req-${Date.now()}-${Math.random().toString(16).slice(2)}`;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export interface AppOptions {
  pollMs?: number;
  supervisor?: string;
}

export class App {
  readonly store = new Store();
  readonly refs: Refs;
  private supervisor: string;
  private readonly pollMs: number;
  private readonly unbindKeys: () => void;
  private readonly handlers: UiHandlers;

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
    options: AppOptions = {},
  ) {
    this.pollMs = options.pollMs ?? 750;
    this.supervisor = options.supervisor ?? "supervisor";
    this.handlers = {
      selectItem: (id) => this.store.select(id),
      verdict: (id, decision) => {
        void this.verdictById(id, decision);
      },
      setQueueFilter: (predicate) => {
        this.store.setQueueFilter(predicate);
        void this.refreshQueue();
      },
      refreshQueue: () => {
        void this.refresh();
      },
      runIteration: () => {
        void this.runIteration();
      },
      loadBrowser: () => {
        void this.loadBrowserFromControls();
      },
      pageBrowser: (delta) => {
        void this.pageBrowser(delta);
      },
      openProvenance: (predicate, args) => {
        void this.openProvenance(predicate, args);
      },
      setSupervisor: (name) => {
        this.supervisor = name.trim() || "supervisor";
      },
    };
    this.refs = buildSkeleton(root, this.handlers);
    this.refs.supervisor.value = this.supervisor;
    this.store.subscribe(() => renderAll(this.refs, this.store.state, this.handlers));
    this.unbindKeys = bindKeyboard(root.ownerDocument, {
      next: () => this.store.moveSelection(1),
      previous: () => this.store.moveSelection(-1),
      approve: () => {
        void this.approveSelected();
      },
      reject: () => {
        void this.rejectSelected();
      },
      refresh: () => {
        void this.refresh();
      },
      iterate: () => {
        void this.runIteration();
      },
    });
  }

  destroy(): void {
    this.unbindKeys();
  }

  async init(): Promise<void> {
    await this.refresh();
  }

  async refresh(): Promise<void> {
    await this.refreshStatus();
    await this.refreshQueue();
    const iteration = this.store.state.status?.iteration ?? 0;
    if (iteration > 0 && this.store.state.iterationDetail?.number !== iteration) {
      await this.showIteration(iteration);
    }
  }

  async refreshStatus(): Promise<void> {
    this.store.setStatus(await this.api.status());
  }

  async refreshQueue(): Promise<void> {
    const page = await this.api.queue(this.store.state.queueFilter);
    this.store.setQueue(page.items, page.total);
  }

  selectedItem(): QueueItem | null {
    return this.store.selectedItem();
  }

  async approveSelected(): Promise<void> {
    const item = this.store.selectedItem();
    if (item) await this.verdict(item, "approve");
  }

  async rejectSelected(): Promise<void> {
    const item = this.store.selectedItem();
    if (item) await this.verdict(item, "reject");
  }

  async verdictById(id: string, decision: Decision): Promise<void> {
    const item = this.store.state.queue.find((entry) => entry.id === id);
    if (item) await this.verdict(item, decision);
  }

  /** Optimistic verdict: the row leaves the queue immediately; a refusal
   * puts it back (409) or reloads the queue (404, stale view). */
  async verdict(item: QueueItem, decision: Decision): Promise<void> {
    const taken = this.store.takeFromQueue(item.id);
    if (!taken) return;
    this.store.setNotice(null);
    try {
      await this.api.postVerdict(item.id, decision, this.supervisor, newRequestId());
      await this.refreshStatus();
      await this.refreshBrowserIfShowing(item.predicate);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.store.restoreToQueue(taken);
        this.store.setNotice(`refused: ${error.detail}`);
      } else if (error instanceof ApiError && error.status === 404) {
        this.store.setNotice(`gone: ${error.detail}`);
        await this.refreshQueue();
      } else {
        this.store.restoreToQueue(taken);
        this.store.setNotice(
          error instanceof Error ? `request failed: ${error.message}` : "request failed",
        );
      }
    }
  }

  /** Start a pass and wait for the service to go idle again. */
  async runIteration(): Promise<void> {
    const state = this.store.state;
    if (state.iterationInFlight || state.status?.iteration_running) return;
    if (state.status && !state.status.iterations_available) return;
    this.store.setIterationInFlight(true);
    this.store.setNotice(null);
    try {
      const started = await this.api.startIteration(newRequestId());
      await this.waitForIdle();
      await this.refresh();
      await this.showIteration(started.iteration);
      const error = this.store.state.status?.last_iteration_error;
      if (error) this.store.setNotice(`iteration failed: ${error}`);
    } catch (error) {
      if (error instanceof ApiError) {
        this.store.setNotice(`iteration refused: ${error.detail}`);
      } else {
        this.store.setNotice("iteration request failed");
      }
      await this.refreshStatus();
    } finally {
      this.store.setIterationInFlight(false);
    }
  }

  async waitForIdle(timeoutMs = 60_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.api.status();
      this.store.setStatus(status);
      if (!status.iteration_running) return;
      if (Date.now() > deadline) throw new Error("iteration did not finish in time");
      await sleep(this.pollMs);
    }
  }

  async showIteration(number: number): Promise<void> {
    try {
      this.store.setIterationDetail(await this.api.iterationDetail(number));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.store.setIterationDetail(null);
        return;
      }
      throw error;
    }
  }

  async openBrowser(
    kind: "category" | "relation",
    name: string,
    status: string | null = null,
    offset = 0,
    limit = 25,
  ): Promise<void> {
    const page = await this.api.instances(kind, name, {
      status: status ?? undefined,
      offset,
      limit,
    });
    this.store.mergeBrowserPage(page, kind, status, limit);
    this.refs.browserKind.value = kind;
    this.refs.browserName.value = name;
    this.refs.browserStatus.value = status ?? "";
  }

  private async loadBrowserFromControls(): Promise<void> {
    const kind = this.refs.browserKind.value === "relation" ? "relation" : "category";
    renderAll(this.refs, this.store.state, this.handlers); // refresh name options for kind
    const name = this.refs.browserName.value;
    if (!name) return;
    const status = this.refs.browserStatus.value || null;
    await this.openBrowser(kind, name, status);
  }

  private async pageBrowser(delta: number): Promise<void> {
    const view = this.store.state.browser;
    if (!view) return;
    const offset = Math.max(0, view.offset + delta * view.limit);
    await this.openBrowser(view.kind, view.name, view.status, offset, view.limit);
  }

  private async refreshBrowserIfShowing(predicate: string): Promise<void> {
    const view = this.store.state.browser;
    if (view && view.name === predicate) {
      await this.openBrowser(view.kind, view.name, view.status, view.offset, view.limit);
    }
  }

  async openProvenance(predicate: string, args: string[]): Promise<void> {
    this.store.setProvenance(await this.api.provenance(predicate, args));
  }
}
