/** Page bootstrap: wires the session to the static markup. */

import { ApiClient } from "./api.js";
import { renderSeriesChart, Series } from "./chart.js";
import { Session, SessionView } from "./session.js";
import { bindExpansion, renderProfileExplorer, renderResults } from "./views.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startApp(baseUrl = ""): Session {
  const api = new ApiClient(baseUrl);
  const expand = bindExpansion(api);

  const userInput = byId<HTMLInputElement>("user-input");
  const registerButton = byId<HTMLButtonElement>("register-button");
  const selectButton = byId<HTMLButtonElement>("select-button");
  const queryInput = byId<HTMLInputElement>("query-input");
  const searchButton = byId<HTMLButtonElement>("search-button");
  const statusLine = byId<HTMLElement>("status-line");
  const resultsPane = byId<HTMLElement>("results-pane");
  const chartPane = byId<HTMLElement>("chart-pane");
  const profilePane = byId<HTMLElement>("profile-pane");

  const session = new Session(api, (view) => render(view));

  function chartSeries(view: SessionView): Series[] {
    const concepts = Object.keys(view.lastQueryVector).sort();
    return concepts.map((concept) => ({
      label: concept,
      values: session.series(concept),
    }));
  }

  function render(view: SessionView): void {
    statusLine.textContent = view.error
      ? view.error
      : view.busy
        ? "working..."
        : view.userId
          ? `user: ${view.userId} (${view.snapshots.length} queries this session)`
          : "register or select a user";
    statusLine.classList.toggle("error", view.error !== null);
    renderResults(resultsPane, view.results, expand);
    renderSeriesChart(chartPane, chartSeries(view));
    if (view.userId) {
      api
        .profile(view.userId)
        .then((profile) => renderProfileExplorer(profilePane, profile))
        .catch(() => profilePane.replaceChildren());
    }
  }

  registerButton.addEventListener("click", () => {
    void session.register(userInput.value);
  });
  selectButton.addEventListener("click", () => {
    void session.selectUser(userInput.value);
  });
  searchButton.addEventListener("click", () => {
    void session.searchAndRefresh({ text: queryInput.value });
  });
  queryInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void session.searchAndRefresh({ text: queryInput.value });
  });

  render(session.view);
  return session;
}

if (typeof document !== "undefined" && document.getElementById("results-pane")) {
  startApp();
}
