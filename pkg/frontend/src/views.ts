/** DOM rendering of search results and the profile explorer. */

import { ApiClient, NodeContext, ProfileResponse, RankedResult } from "./api.js";
import { BarDatum, formatNumber, renderBarChart } from "./chart.js";

export function renderResults(
  container: HTMLElement,
  results: RankedResult[],
  onExpand: (result: RankedResult, slot: HTMLElement) => void,
): void {
  container.replaceChildren();
  if (results.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "no results";
    container.append(empty);
    return;
  }
  const list = document.createElement("ol");
  list.className = "results";
  for (const result of results) {
    const item = document.createElement("li");
    item.className = "result";

    const headline = document.createElement("div");
    headline.className = "result-head";

    const badge = document.createElement("span");
    badge.className = `badge badge-${result.node_type}`;
    badge.textContent = result.node_type;

    const where = document.createElement("span");
    where.className = "result-where";
    where.textContent = `${result.doc_id} [${result.start}, ${result.end}]`;

    const score = document.createElement("span");
    score.className = "result-score";
    score.dataset.value = String(result.score);
    score.textContent = formatNumber(result.score);

    headline.append(badge, where, score);

    const matched = document.createElement("div");
    matched.className = "result-matched";
    matched.textContent = result.matched_concepts.join(", ");

    const context = document.createElement("div");
    context.className = "result-context";
    const expand = document.createElement("button");
    expand.type = "button";
    expand.textContent = "show context";
    expand.addEventListener("click", () => onExpand(result, context));

    item.append(headline, matched, expand, context);
    list.append(item);
  }
  container.append(list);
}

export function renderNodeContext(slot: HTMLElement, node: NodeContext): void {
  slot.replaceChildren();
  const path = document.createElement("div");
  path.className = "node-path";
  path.textContent =
    node.path.length > 0 ? `${node.path.join(" > ")} > ${node.name ?? "#text"}` : node.name ?? "#text";
  const body = document.createElement("blockquote");
  body.className = "node-text";
  body.textContent = node.text_content ?? node.value ?? "";
  slot.append(path, body);
}

export interface ProfileExplorerOptions {
  topN?: number;
}

/** Bar view of the strongest interests plus the raw history table. */
export function renderProfileExplorer(
  container: HTMLElement,
  profile: ProfileResponse,
  options: ProfileExplorerOptions = {},
): void {
  container.replaceChildren();
  const topN = options.topN ?? 10;
  const bars: BarDatum[] = Object.entries(profile.weights)
    .sort(([a, wa], [b, wb]) => wb - wa || (a < b ? -1 : 1))
    .slice(0, topN)
    .map(([label, value]) => ({ label, value }));
  const chart = document.createElement("div");
  chart.className = "profile-bars";
  renderBarChart(chart, bars);

  const history = document.createElement("table");
  history.className = "history";
  const head = document.createElement("tr");
  for (const column of ["t", "query concepts"]) {
    const cell = document.createElement("th");
    cell.textContent = column;
    head.append(cell);
  }
  history.append(head);
  for (const entry of profile.history) {
    const row = document.createElement("tr");
    const when = document.createElement("td");
    when.textContent = String(entry.timestamp);
    const what = document.createElement("td");
    what.textContent = Object.entries(entry.vector)
      .map(([concept, weight]) => `${concept}:${formatNumber(weight)}`)
      .join(" ");
    row.append(when, what);
    history.append(row);
  }
  container.append(chart, history);
}

export function bindExpansion(api: ApiClient) {
  return (result: RankedResult, slot: HTMLElement): void => {
    slot.textContent = "loading context...";
    api
      .node(result.doc_id, result.start)
      .then((node) => renderNodeContext(slot, node))
      .catch((error: unknown) => {
        slot.textContent = error instanceof Error ? error.message : String(error);
      });
  };
}
