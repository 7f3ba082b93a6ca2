// Search view: keyword panel (1), query box (2), result grid (3),
// plus the two-phase rename dialog. All state lives in the DOM and a
// small amount of view state here; the server is consulted through
// the injected ApiClient only.

import {
  ApiClient,
  KeywordSummary,
  QuerySyntaxError,
  RenamePlanResponse,
  SearchResultRow,
} from "./api.js";

export interface SearchApp {
  submitQuery(text: string): Promise<void>;
  clickKeyword(key: string, value: string): Promise<void>;
  previewRename(template: string): Promise<void>;
  confirmApply(): Promise<void>;
  loadKeywords(): Promise<void>;
  readonly root: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

export function createApp(root: HTMLElement, api: ApiClient): SearchApp {
  root.innerHTML = "";

  // region 1: keywords found by the analysis
  const keywordPanel = el("aside", { class: "keywords", "data-testid": "keyword-panel" });
  keywordPanel.append(el("h2", {}, "Keywords"));
  const keywordList = el("div", { class: "keyword-list" });
  keywordPanel.append(keywordList);

  // region 2: search box
  const searchForm = el("form", { class: "search", "data-testid": "search-form" });
  const queryInput = el("input", {
    type: "text",
    class: "query-input",
    "data-testid": "query-input",
    placeholder: '["cinema", "electric"] in "description" AND "date" < 12/1970',
  });
  const searchButton = el("button", { type: "submit" }, "Search");
  const errorBox = el("div", { class: "query-error hidden", "data-testid": "query-error" });
  searchForm.append(queryInput, searchButton);

  // region 3: retrieved drawings
  const resultsGrid = el("section", { class: "results", "data-testid": "results-grid" });
  const statusLine = el("div", { class: "status", "data-testid": "status-line" });

  // rename: plan first, apply only on explicit confirmation
  const renamePanel = el("section", { class: "rename", "data-testid": "rename-panel" });
  renamePanel.append(el("h2", {}, "Rename by metadata"));
  const renameForm = el("form", { "data-testid": "rename-form" });
  const templateInput = el("input", {
    type: "text",
    "data-testid": "template-input",
    placeholder: "{project_name}_{drawing_number}",
  });
  const previewButton = el("button", { type: "submit" }, "Preview");
  renameForm.append(templateInput, previewButton);
  const planTable = el("div", { "data-testid": "plan-table" });
  renamePanel.append(renameForm, planTable);

  const main = el("main", { class: "content" });
  main.append(searchForm, errorBox, statusLine, resultsGrid);
  root.append(keywordPanel, main, renamePanel);

  let lastGoodResults: SearchResultRow[] = [];
  let inflight: AbortController | null = null;
  let currentPlan: RenamePlanResponse | null = null;
  let awaitingConfirm = false;

  function renderResults(rows: SearchResultRow[]): void {
    resultsGrid.innerHTML = "";
    for (const row of rows) {
      const card = el("article", { class: "card", "data-testid": "result-card" });
      if (row.thumbnail) {
        card.append(el("img", { src: row.thumbnail, alt: `title block of ${row.drawing_id}` }));
      }
      card.append(el("h3", { "data-testid": "result-id" }, row.drawing_id));
      const dl = el("dl");
      for (const [key, values] of Object.entries(row.fields)) {
        dl.append(el("dt", {}, key));
        dl.append(el("dd", {}, values.join("; ")));
      }
      card.append(dl);
      resultsGrid.append(card);
    }
    statusLine.textContent = `${rows.length} drawing(s)`;
  }

  function showQueryError(query: string, err: QuerySyntaxError): void {
    // underline the offending character; offsets index into the raw text
    errorBox.innerHTML = "";
    errorBox.classList.remove("hidden");
    const message = err.expected ? `${err.message}` : err.message;
    errorBox.append(el("div", { class: "err-message" }, message));
    const line = el("pre", { class: "err-line" });
    const clamped = Math.min(err.offset, query.length);
    line.append(document.createTextNode(query.slice(0, clamped)));
    const caret = el("span", { class: "err-caret", "data-testid": "error-caret", "data-offset": String(err.offset) });
    caret.textContent = clamped < query.length ? query[clamped] : " ";
    line.append(caret);
    line.append(document.createTextNode(query.slice(clamped + 1)));
    errorBox.append(line);
  }

  function clearQueryError(): void {
    errorBox.classList.add("hidden");
    errorBox.innerHTML = "";
  }

  async function submitQuery(text: string): Promise<void> {
    queryInput.value = text;
    inflight?.abort(); // at most one search in flight
    const controller = new AbortController();
    inflight = controller;
    try {
      const response = await api.search(text, controller.signal);
      if (inflight !== controller) return; // a newer search superseded us
      clearQueryError();
      lastGoodResults = response.results;
      renderResults(response.results);
    } catch (err) {
      if (controller.signal.aborted) return;
      if (err instanceof QuerySyntaxError) {
        // parse errors never clear the previous results
        showQueryError(text, err);
        renderResults(lastGoodResults);
        return;
      }
      statusLine.textContent = `network error: ${(err as Error).message} — retry?`;
      statusLine.classList.add("error");
    } finally {
      if (inflight === controller) inflight = null;
    }
  }

  async function clickKeyword(key: string, value: string): Promise<void> {
    const clause = `"${key}" = "${value.replaceAll('"', '\\"')}"`;
    const current = queryInput.value.trim();
    const next = current === "" ? clause : `${current} AND ${clause}`;
    await submitQuery(next);
  }

  async function loadKeywords(): Promise<void> {
    const summary: KeywordSummary = await api.keys();
    keywordList.innerHTML = "";
    for (const [key, info] of Object.entries(summary)) {
      const group = el("div", { class: "keyword-group" });
      group.append(el("h3", {}, `${key} (${info.records})`));
      for (const item of info.top_values) {
        const button = el(
          "button",
          { type: "button", class: "keyword", "data-testid": `keyword-${key}-${item.value}` },
          `${item.value} ×${item.count}`,
        );
        button.addEventListener("click", () => void clickKeyword(key, item.value));
        group.append(button);
      }
      keywordList.append(group);
    }
  }

  function renderPlan(plan: RenamePlanResponse): void {
    planTable.innerHTML = "";
    const collisions = new Set(plan.collisions);
    const table = el("table");
    const head = el("tr");
    head.append(el("th", {}, "drawing"), el("th", {}, "old name"), el("th", {}, "new name"));
    table.append(head);
    for (const entry of plan.entries) {
      const collided = [...collisions].some(
        (name) => entry.new_name === name || entry.new_name.startsWith(stripExt(name) + "-"),
      );
      const tr = el("tr", {
        class: collided ? "collision" : "",
        "data-testid": "plan-row",
      });
      tr.append(
        el("td", {}, entry.drawing_id),
        el("td", {}, entry.old_name),
        el("td", { "data-testid": "plan-new-name" }, entry.new_name),
      );
      table.append(tr);
    }
    planTable.append(table);
    if (plan.collisions.length > 0) {
      planTable.append(
        el(
          "p",
          { class: "collision-note", "data-testid": "collision-note" },
          `collisions suffixed -2, -3, …: ${plan.collisions.join(", ")}`,
        ),
      );
    }
    const applyButton = el("button", { type: "button", "data-testid": "apply-button" }, "Apply…");
    applyButton.addEventListener("click", () => void confirmApply());
    planTable.append(applyButton);
  }

  function stripExt(name: string): string {
    const dot = name.lastIndexOf(".");
    return dot > 0 ? name.slice(0, dot) : name;
  }

  async function previewRename(template: string): Promise<void> {
    templateInput.value = template;
    awaitingConfirm = false;
    try {
      currentPlan = await api.renamePlan(template);
    } catch (err) {
      currentPlan = null;
      planTable.innerHTML = "";
      planTable.append(
        el("p", { class: "error", "data-testid": "rename-error" }, (err as Error).message),
      );
      return;
    }
    renderPlan(currentPlan);
  }

  async function confirmApply(): Promise<void> {
    if (!currentPlan) return;
    if (!awaitingConfirm) {
      // first click arms the confirmation; nothing is sent yet
      awaitingConfirm = true;
      const button = planTable.querySelector('[data-testid="apply-button"]');
      if (button) button.textContent = "Really rename? Click to confirm";
      return;
    }
    const outcomes = await api.renameApply(currentPlan.hash);
    awaitingConfirm = false;
    const done = el("p", { "data-testid": "apply-result" });
    done.textContent = outcomes.map((o) => `${o.drawing_id}: ${o.outcome}`).join(", ");
    planTable.append(done);
  }

  searchForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitQuery(queryInput.value);
  });
  renameForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void previewRename(templateInput.value);
  });

  return { submitQuery, clickKeyword, previewRename, confirmApply, loadKeywords, root };
}
