import { ApiClient, ApiError } from "./api.js";
import {
  clusterQueryText,
  initialState,
  withQueryError,
  withQueryResult,
  type WorkbenchState,
} from "./state.js";
import { renderWorkbench } from "./render.js";

const api = new ApiClient("");
const root = document.getElementById("app") as HTMLElement;

let state: WorkbenchState = initialState();
// one in-flight query at a time; responses that lose the race are discarded
let querySequence = 0;

function update(next: WorkbenchState): void {
  state = next;
  const focused = document.activeElement?.id === "query-input";
  root.innerHTML = renderWorkbench(state, (name) => api.ruleRegionUrl(name));
  if (focused) {
    const input = document.getElementById("query-input") as HTMLInputElement | null;
    input?.focus();
    input?.setSelectionRange(input.value.length, input.value.length);
  }
}

async function loadExplorer(): Promise<void> {
  try {
    const [clusters, projection] = await Promise.all([api.getClusters(), api.getProjection()]);
    update({ ...state, clusters, projection, banner: null });
  } catch (err) {
    update({ ...state, banner: `API unreachable: ${err instanceof Error ? err.message : err}` });
  }
}

async function submitQuery(text: string): Promise<void> {
  if (!text.trim() || state.pending) {
    return;
  }
  const seq = ++querySequence;
  update({ ...state, consoleText: text, pending: true });
  try {
    const result = await api.submitQuery(text);
    if (seq !== querySequence) {
      return; // a newer submission superseded this one
    }
    update(withQueryResult(state, text, result, new Date().toISOString()));
  } catch (err) {
    if (seq !== querySequence) {
      return;
    }
    if (err instanceof ApiError) {
      update(withQueryError(state, text, err.body, err.message));
    } else {
      update({ ...state, pending: false, banner: `query failed: ${err}` });
    }
  }
}

function wireEvents(): void {
  root.addEventListener("submit", (event) => {
    const form = event.target as HTMLElement;
    if (form.id === "query-form") {
      event.preventDefault();
      const input = document.getElementById("query-input") as HTMLInputElement;
      void submitQuery(input.value);
    }
  });

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const clusterEl = target.closest<HTMLElement>("[data-cluster]");
    if (clusterEl?.classList.contains("query-cluster")) {
      const id = Number(clusterEl.dataset.cluster);
      const summary = state.clusters?.find((c) => c.id === id);
      if (summary) {
        update({ ...state, consoleText: clusterQueryText(summary) });
        document.getElementById("query-input")?.focus();
      }
      return;
    }
    if (clusterEl && (clusterEl.matches(".legend-item") || clusterEl.matches("circle"))) {
      update({ ...state, selectedCluster: Number(clusterEl.dataset.cluster) });
      return;
    }
    const historyEl = target.closest<HTMLElement>(".history-text");
    if (historyEl?.dataset.text) {
      update({ ...state, consoleText: historyEl.dataset.text });
    }
  });
}

update(state);
wireEvents();
void loadExplorer();
