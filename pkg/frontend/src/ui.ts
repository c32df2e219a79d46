/** DOM construction and rendering. The skeleton is built once; each panel is
 * re-rendered in full from state, with all data set through textContent. */

import type { Decision, ProvenanceEvent, Side } from "./api.js";
import type { AppState } from "./state.js";

export interface UiHandlers {
  selectItem(id: string): void;
  verdict(id: string, decision: Decision): void;
  setQueueFilter(predicate: string | null): void;
  refreshQueue(): void;
  runIteration(): void;
  loadBrowser(): void;
  pageBrowser(delta: number): void;
  openProvenance(predicate: string, args: string[]): void;
  setSupervisor(name: string): void;
}

export interface Refs {
  statusLine: HTMLElement;
  notice: HTMLElement;
  supervisor: HTMLInputElement;
  queueFilter: HTMLSelectElement;
  queueList: HTMLUListElement;
  queueCount: HTMLElement;
  runButton: HTMLButtonElement;
  runState: HTMLElement;
  iterationBody: HTMLElement;
  browserKind: HTMLSelectElement;
  browserName: HTMLSelectElement;
  browserStatus: HTMLSelectElement;
  browserPrev: HTMLButtonElement;
  browserNext: HTMLButtonElement;
  browserRange: HTMLElement;
  browserBody: HTMLTableSectionElement;
  browserEmpty: HTMLElement;
  provenanceBody: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function option(value: string, label?: string): HTMLOptionElement {
  const node = document.createElement("option");
  node.value = value;
  node.textContent = label ?? value;
  return node;
}

export function sideLabel(side: Side): string {
  return side === "L" ? "left" : side === "R" ? "right" : "between";
}

export function buildSkeleton(root: HTMLElement, handlers: UiHandlers): Refs {
  root.textContent = "";

  const header = el("header");
  header.append(el("h1", undefined, "everlearn review"));
  const statusLine = el("span");
  statusLine.id = "status-line";
  header.append(statusLine);

  const notice = el("div");
  notice.id = "notice";

  const main = el("main");
  const left = el("div");
  const right = el("div");

  // --- review queue ---
  const queuePanel = el("section", "panel");
  queuePanel.id = "queue-panel";
  queuePanel.append(el("h2", undefined, "Review queue"));

  const queueBar = el("div", "toolbar");
  const supervisorLabel = el("label", undefined, "reviewer ");
  const supervisor = el("input");
  supervisor.id = "supervisor";
  supervisor.placeholder = "your name";
  supervisor.addEventListener("input", () => handlers.setSupervisor(supervisor.value));
  supervisorLabel.append(supervisor);

  const filterLabel = el("label", undefined, "predicate ");
  const queueFilter = el("select");
  queueFilter.id = "queue-filter";
  queueFilter.append(option("", "all"));
  queueFilter.addEventListener("change", () =>
    handlers.setQueueFilter(queueFilter.value || null),
  );
  filterLabel.append(queueFilter);

  const refresh = el("button", undefined, "Refresh");
  refresh.id = "refresh-queue";
  refresh.addEventListener("click", () => handlers.refreshQueue());

  const queueCount = el("span");
  queueCount.id = "queue-count";

  queueBar.append(supervisorLabel, filterLabel, refresh, queueCount);

  const queueList = el("ul", "queue");
  queueList.id = "queue-list";

  const help = el("p", "kbd-help");
  for (const [key, what] of [
    ["j/k", "move"],
    ["a", "approve"],
    ["r", "reject"],
    ["u", "refresh"],
    ["i", "iterate"],
  ]) {
    help.append(el("kbd", undefined, key), ` ${what}  `);
  }

  queuePanel.append(queueBar, queueList, help);
  left.append(queuePanel);

  // --- iterations ---
  const iterationPanel = el("section", "panel");
  iterationPanel.id = "iteration-panel";
  iterationPanel.append(el("h2", undefined, "Iterations"));

  const iterationBar = el("div", "toolbar");
  const runButton = el("button", undefined, "Run iteration");
  runButton.id = "run-iteration";
  runButton.addEventListener("click", () => handlers.runIteration());
  const runState = el("span");
  runState.id = "run-state";
  iterationBar.append(runButton, runState);

  const iterationBody = el("div");
  iterationBody.id = "iteration-body";
  iterationPanel.append(iterationBar, iterationBody);

  // --- knowledge base browser ---
  const browserPanel = el("section", "panel");
  browserPanel.id = "browser-panel";
  browserPanel.append(el("h2", undefined, "Knowledge base"));

  const browserBar = el("div", "toolbar");
  const browserKind = el("select");
  browserKind.id = "browser-kind";
  browserKind.append(option("category"), option("relation"));
  const browserName = el("select");
  browserName.id = "browser-name";
  const browserStatus = el("select");
  browserStatus.id = "browser-status";
  browserStatus.append(
    option("", "any status"),
    option("seed"),
    option("promoted"),
    option("approved"),
    option("rejected"),
  );
  const load = el("button", undefined, "Load");
  load.id = "browser-load";
  load.addEventListener("click", () => handlers.loadBrowser());
  browserKind.addEventListener("change", () => handlers.loadBrowser());
  browserName.addEventListener("change", () => handlers.loadBrowser());
  browserStatus.addEventListener("change", () => handlers.loadBrowser());

  const browserPrev = el("button", undefined, "Prev");
  browserPrev.id = "browser-prev";
  browserPrev.addEventListener("click", () => handlers.pageBrowser(-1));
  const browserNext = el("button", undefined, "Next");
  browserNext.id = "browser-next";
  browserNext.addEventListener("click", () => handlers.pageBrowser(1));
  const browserRange = el("span");
  browserRange.id = "browser-range";

  browserBar.append(
    browserKind,
    browserName,
    browserStatus,
    load,
    browserPrev,
    browserNext,
    browserRange,
  );

  const table = el("table");
  const thead = el("thead");
  const headRow = el("tr");
  for (const title of ["assertion", "status", "score", "pass", "recorded", ""]) {
    headRow.append(el("th", undefined, title));
  }
  thead.append(headRow);
  const browserBody = document.createElement("tbody");
  browserBody.id = "browser-body";
  table.append(thead, browserBody);

  const browserEmpty = el("div", "browser-empty");
  browserEmpty.id = "browser-empty";

  const provenanceBody = el("div", "provenance");
  provenanceBody.id = "provenance-body";

  browserPanel.append(browserBar, table, browserEmpty, provenanceBody);
  right.append(iterationPanel, browserPanel);

  main.append(left, right);
  root.append(header, notice, main);

  return {
    statusLine,
    notice,
    supervisor,
    queueFilter,
    queueList,
    queueCount,
    runButton,
    runState,
    iterationBody,
    browserKind,
    browserName,
    browserStatus,
    browserPrev,
    browserNext,
    browserRange,
    browserBody,
    browserEmpty,
    provenanceBody,
  };
}

function refreshOptions(select: HTMLSelectElement, values: string[], keepBlank: boolean): void {
  const want = (keepBlank ? [""] : []).concat(values);
  const have = Array.from(select.options).map((entry) => entry.value);
  if (want.length === have.length && want.every((value, index) => value === have[index])) {
    return;
  }
  const current = select.value;
  select.textContent = "";
  if (keepBlank) select.append(option("", "all"));
  for (const value of values) select.append(option(value));
  if (want.includes(current)) select.value = current;
}

export function renderStatusLine(refs: Refs, state: AppState): void {
  const status = state.status;
  if (!status) {
    refs.statusLine.textContent = "connecting...";
    return;
  }
  const counts = status.assertions;
  refs.statusLine.textContent =
    `pass ${status.iteration} · profile ${status.profile ?? "?"} · ` +
    `${counts.seed ?? 0} seed, ${counts.promoted ?? 0} promoted, ` +
    `${counts.approved ?? 0} approved, ${counts.rejected ?? 0} rejected · ` +
    `${status.queue_size} queued · ${status.trusted_patterns} trusted patterns`;
  refreshOptions(refs.queueFilter, status.categories.concat(status.relations), true);
  const names =
    refs.browserKind.value === "relation" ? status.relations : status.categories;
  refreshOptions(refs.browserName, names, false);
}

export function renderNotice(refs: Refs, state: AppState): void {
  refs.notice.textContent = state.notice ?? "";
}

export function renderQueue(refs: Refs, state: AppState, handlers: UiHandlers): void {
  refs.queueList.textContent = "";
  refs.queueCount.textContent =
    state.queueTotal > state.queue.length
      ? `${state.queue.length} of ${state.queueTotal}`
      : `${state.queue.length} waiting`;
  if (state.queue.length === 0) {
    const empty = el("li", "queue-empty", "Nothing waiting for review.");
    refs.queueList.append(empty);
    return;
  }
  for (const item of state.queue) {
    const row = el("li");
    row.dataset.queueItem = "";
    row.dataset.id = item.id;
    if (item.id === state.selectedId) row.classList.add("selected");
    row.addEventListener("click", () => handlers.selectItem(item.id));

    const body = el("div", "queue-main");
    body.append(el("span", "queue-reading", item.human_readable));
    body.append(
      el(
        "span",
        "queue-meta",
        `${item.predicate}(${item.args.join(", ")}) · queued at pass ${item.queued_at}`,
      ),
    );
    const evidence = item.evidence
      .map(([tp, side, count]) => `"${tp}" ${sideLabel(side)} ×${count}`)
      .join("  ·  ");
    body.append(el("span", "evidence", evidence));

    const score = el("span", "score", item.score.toFixed(1));

    const approve = el("button", "approve", "approve");
    approve.dataset.role = "approve";
    approve.addEventListener("click", (event) => {
      event.stopPropagation();
      handlers.verdict(item.id, "approve");
    });
    const reject = el("button", "reject", "reject");
    reject.dataset.role = "reject";
    reject.addEventListener("click", (event) => {
      event.stopPropagation();
      handlers.verdict(item.id, "reject");
    });

    row.append(body, score, approve, reject);
    refs.queueList.append(row);
  }
}

export function renderIteration(refs: Refs, state: AppState): void {
  const status = state.status;
  const running = Boolean(status?.iteration_running) || state.iterationInFlight;
  refs.runButton.disabled = running || !status?.iterations_available;
  refs.runState.textContent = !status?.iterations_available
    ? "no table loaded"
    : running
      ? "running..."
      : "idle";

  refs.iterationBody.textContent = "";
  if (status?.last_iteration_error) {
    refs.iterationBody.append(
      el("p", "error-text", `last run failed: ${status.last_iteration_error}`),
    );
  }
  const detail = state.iterationDetail;
  if (!detail) return;

  refs.iterationBody.append(el("h3", undefined, `Pass ${detail.number}`));
  const stats = el("p", "iteration-stats");
  stats.textContent = Object.entries(detail.stats)
    .map(([key, value]) => `${key} ${value}`)
    .join(" · ");
  refs.iterationBody.append(stats);

  if (detail.trusted_scores.length > 0) {
    const table = el("table");
    const head = el("tr");
    for (const title of ["predicate", "pattern", "side", "support", "coverage"]) {
      head.append(el("th", undefined, title));
    }
    const thead = el("thead");
    thead.append(head);
    const tbody = document.createElement("tbody");
    for (const [predicate, tp, side, support, coverage] of detail.trusted_scores) {
      const row = el("tr");
      row.dataset.trustedRow = "";
      row.dataset.predicate = predicate;
      row.dataset.tp = tp;
      row.dataset.side = side;
      row.dataset.support = String(support);
      row.append(
        el("td", undefined, predicate),
        el("td", undefined, tp),
        el("td", undefined, sideLabel(side)),
        el("td", undefined, String(support)),
        el("td", undefined, String(coverage)),
      );
      tbody.append(row);
    }
    table.append(thead, tbody);
    refs.iterationBody.append(table);
  }
}

function statusBadge(status: string): HTMLElement {
  return el("span", `status-badge status-${status}`, status);
}

export function renderBrowser(refs: Refs, state: AppState, handlers: UiHandlers): void {
  const view = state.browser;
  refs.browserBody.textContent = "";
  if (!view) {
    refs.browserEmpty.textContent = "Pick a predicate and press Load.";
    refs.browserRange.textContent = "";
    refs.browserPrev.disabled = true;
    refs.browserNext.disabled = true;
    return;
  }
  refs.browserPrev.disabled = view.offset <= 0;
  refs.browserNext.disabled = view.offset + view.items.length >= view.total;
  refs.browserRange.textContent =
    view.total === 0
      ? "no matches"
      : `${view.offset + 1}-${view.offset + view.items.length} of ${view.total}`;
  refs.browserEmpty.textContent = view.items.length === 0 ? "No assertions match." : "";

  for (const assertion of view.items) {
    const row = document.createElement("tr");
    row.dataset.browserRow = "";
    row.dataset.id = assertion.id;
    row.dataset.status = assertion.status;

    const reading = el("td", undefined, assertion.human_readable);
    const status = el("td");
    status.append(statusBadge(assertion.status));
    const score = el("td", undefined, assertion.score.toFixed(1));
    const pass = el("td", undefined, String(assertion.iteration));
    const when = el("td", undefined, assertion.timestamp.replace("T", " "));
    const actions = el("td");
    const history = el("button", undefined, "history");
    history.dataset.role = "provenance";
    history.addEventListener("click", () =>
      handlers.openProvenance(assertion.predicate, assertion.args),
    );
    actions.append(history);

    row.append(reading, status, score, pass, when, actions);
    refs.browserBody.append(row);
  }
}

function describeEvent(event: ProvenanceEvent): string {
  const parts: string[] = [event.timestamp.replace("T", " "), event.event];
  if (event.event === "verdict") {
    parts.push(`${event.decision} by ${event.supervisor}`);
  } else {
    if (event.iteration !== undefined) parts.push(`pass ${event.iteration}`);
    if (event.score !== undefined) parts.push(`score ${event.score}`);
  }
  return parts.join(" · ");
}

export function renderProvenance(refs: Refs, state: AppState): void {
  refs.provenanceBody.textContent = "";
  const payload = state.provenance;
  if (!payload) return;
  const title = el(
    "h3",
    undefined,
    `${payload.human_readable} · ${payload.status}` +
      (payload.blacklisted ? " (blacklisted)" : ""),
  );
  refs.provenanceBody.append(title);
  const list = el("ol");
  for (const event of payload.events) {
    const entry = el("li", undefined, describeEvent(event));
    entry.dataset.provenanceEvent = event.event;
    list.append(entry);
  }
  refs.provenanceBody.append(list);
}

export function renderAll(refs: Refs, state: AppState, handlers: UiHandlers): void {
  renderStatusLine(refs, state);
  renderNotice(refs, state);
  renderQueue(refs, state, handlers);
  renderIteration(refs, state);
  renderBrowser(refs, state, handlers);
  renderProvenance(refs, state);
}
