// Pure rendering: every function maps state to an HTML string. The same
// state always yields the same markup, and every displayed fact comes
// straight from an API response.

import type { WorkbenchState } from "./state.js";
import type {
  ClusterSummary,
  CountedValue,
  FormalVerdict,
  ProjectionResponse,
  QueryResponse,
  SatVerdict,
  WitnessReport,
} from "./types.js";

export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

export function clusterColor(cluster: number): string {
  return PALETTE[((cluster % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

export function renderScatter(projection: ProjectionResponse, selected: number | null): string {
  const width = 460;
  const height = 340;
  const pad = 16;
  const xs = projection.points.map((p) => p.x);
  const ys = projection.points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) =>
    xMax === xMin ? width / 2 : pad + ((x - xMin) / (xMax - xMin)) * (width - 2 * pad);
  const sy = (y: number) =>
    yMax === yMin ? height / 2 : height - pad - ((y - yMin) / (yMax - yMin)) * (height - 2 * pad);
  const dots = projection.points
    .map((p) => {
      const dim = selected !== null && p.cluster !== selected;
      return (
        `<circle cx="${sx(p.x).toFixed(1)}" cy="${sy(p.y).toFixed(1)}" r="3.5" ` +
        `fill="${clusterColor(p.cluster)}" opacity="${dim ? 0.18 : 0.85}" ` +
        `data-cluster="${p.cluster}" data-row="${p.row}"><title>row ${p.row} / cluster ${p.cluster}</title></circle>`
      );
    })
    .join("");
  return (
    `<svg class="scatter" viewBox="0 0 ${width} ${height}" role="img" ` +
    `aria-label="cluster projection">${dots}</svg>`
  );
}

export function renderLegend(clusters: ClusterSummary[], selected: number | null): string {
  const items = clusters
    .map((c) => {
      const cls = selected === c.id ? "legend-item selected" : "legend-item";
      return (
        `<li class="${cls}" data-cluster="${c.id}">` +
        `<span class="swatch" style="background:${clusterColor(c.id)}"></span>` +
        `cluster ${c.id} <span class="count">(${c.member_count})</span></li>`
      );
    })
    .join("");
  return `<ul class="legend">${items}</ul>`;
}

function countedList(title: string, values: CountedValue[]): string {
  const rows = values.map(([v, n]) => `<tr><td>${esc(v)}</td><td>${n}</td></tr>`).join("");
  return (
    `<table class="counted"><caption>${esc(title)}</caption>` +
    `<tbody>${rows || '<tr><td colspan="2" class="empty">none</td></tr>'}</tbody></table>`
  );
}

export function renderClusterSummary(summary: ClusterSummary): string {
  const zonePairs: CountedValue[] = summary.top_zone_pairs.map(([pair, n]) => [
    `${pair[0]} → ${pair[1]}`,
    n,
  ]);
  return (
    `<div class="cluster-summary" data-cluster="${summary.id}">` +
    `<h3>Cluster ${summary.id} · ${summary.member_count} members</h3>` +
    (summary.member_count === 0 ? '<p class="empty">0 members</p>' : "") +
    `<button class="query-cluster" data-cluster="${summary.id}">query this cluster</button>` +
    `<div class="summary-tables">` +
    countedList("Source IPs", summary.top_src_ips) +
    countedList("Destination IPs", summary.top_dst_ips) +
    countedList("Applications", summary.top_applications) +
    countedList("Zone pairs", zonePairs) +
    `</div></div>`
  );
}

export function renderClusterExplorer(state: WorkbenchState): string {
  if (state.clusters === null || state.projection === null) {
    return '<section id="explorer"><p class="loading">loading clusters…</p></section>';
  }
  const selected =
    state.selectedCluster !== null
      ? state.clusters.find((c) => c.id === state.selectedCluster) ?? null
      : null;
  return (
    `<section id="explorer"><h2>Cluster explorer</h2><div class="explorer-grid">` +
    renderScatter(state.projection, state.selectedCluster) +
    renderLegend(state.clusters, state.selectedCluster) +
    `</div>` +
    (selected ? renderClusterSummary(selected) : '<p class="hint">select a cluster</p>') +
    `</section>`
  );
}

export function renderParseError(text: string, message: string, position: number | null): string {
  if (position === null) {
    return `<div class="parse-error"><p>${esc(message)}</p></div>`;
  }
  const caret = " ".repeat(position) + "^";
  return (
    `<div class="parse-error"><pre class="query-echo">${esc(text)}\n${esc(caret)}</pre>` +
    `<p>${esc(message)} (at position ${position})</p></div>`
  );
}

export function renderWitnessFields(witness: SatVerdict["witness"]): string {
  if (!witness) {
    return "";
  }
  const order: (keyof NonNullable<SatVerdict["witness"]>)[] = [
    "from_zone", "to_zone", "src_ip", "dst_ip", "application", "protocol", "dst_port",
  ];
  const rows = order
    .map((f) => `<tr><th>${esc(f)}</th><td>${esc(witness[f])}</td></tr>`)
    .join("");
  return `<table class="witness"><caption>Witness packet</caption><tbody>${rows}</tbody></table>`;
}

export function renderTrace(verdict: FormalVerdict, ruleLink: (name: string) => string): string {
  if (verdict.status === "UNSAT") {
    return (
      `<div class="verdict unsat"><h3>No packet exists</h3>` +
      `<p>${esc(verdict.reason)}</p>` +
      (verdict.field ? `<p>failing constraint field: <code>${esc(verdict.field)}</code></p>` : "") +
      `</div>`
    );
  }
  const lines = verdict.trace_lines
    .map((line) => `<li class="trace-line">${esc(line)}</li>`)
    .join("");
  const ruleRef =
    verdict.matched_rule === "DEFAULT"
      ? `<span class="rule-name">DEFAULT</span>`
      : `<a class="rule-name" href="${esc(ruleLink(verdict.matched_rule))}">${esc(verdict.matched_rule)}</a>`;
  return (
    `<div class="verdict sat"><h3>${esc(verdict.action)} via ${ruleRef}</h3>` +
    `<ol class="trace">${lines}</ol>` +
    renderWitnessFields(verdict.witness) +
    `</div>`
  );
}

export function renderResult(result: QueryResponse, ruleLink: (name: string) => string): string {
  const badge =
    `<span class="badge badge-${result.provenance}">${result.provenance}</span>` +
    (result.escalated ? '<span class="badge badge-escalated">escalated to formal</span>' : "");
  let payload: string;
  if (result.provenance === "log_search") {
    const rows = (result.matches ?? []).map((r) => `<tr><td>row ${r}</td></tr>`).join("");
    payload =
      `<p>${(result.matches ?? []).length} matching rows</p>` +
      (rows ? `<table class="matches"><tbody>${rows}</tbody></table>` : "");
  } else if (result.provenance === "correlation") {
    const rows = (result.neighbors ?? [])
      .map(([token, sim]) => `<tr><td>${esc(token)}</td><td>${sim.toFixed(4)}</td></tr>`)
      .join("");
    payload = `<table class="neighbors"><tbody>${rows}</tbody></table>`;
  } else {
    payload = result.verdict ? renderTrace(result.verdict, ruleLink) : "";
  }
  return `<div class="result">${badge}${payload}</div>`;
}

export function renderHistory(state: WorkbenchState): string {
  if (state.history.length === 0) {
    return '<p class="hint">no queries yet</p>';
  }
  const items = [...state.history]
    .reverse()
    .map(
      (h) =>
        `<li><code class="history-text" data-text="${esc(h.text)}">${esc(h.text)}</code>` +
        `<span class="badge badge-${h.provenance}">${h.provenance}</span>` +
        (h.escalated ? '<span class="badge badge-escalated">escalated</span>' : "") +
        `<span class="at">${esc(h.at)}</span></li>`,
    )
    .join("");
  return `<ol class="history">${items}</ol>`;
}

export function renderWitnessReport(report: WitnessReport): string {
  const failures = report.failures
    .map(
      (f) =>
        `<li>row ${f.row}: ${esc(f.reason)} <code>${esc(JSON.stringify(f.constraints))}</code></li>`,
    )
    .join("");
  return (
    `<div class="witness-report"><p>sampled ${report.sampled}, passed ${report.passed}, ` +
    `failures ${report.failures.length}</p>` +
    (failures ? `<ul class="failures">${failures}</ul>` : "") +
    `</div>`
  );
}

export function renderConsole(state: WorkbenchState, ruleLink: (name: string) => string): string {
  let body = "";
  if (state.pending) {
    body = '<p class="loading">running…</p>';
  } else if (state.consoleError) {
    body = renderParseError(
      state.consoleError.text,
      state.consoleError.message,
      state.consoleError.position,
    );
  } else if (state.current) {
    body = renderResult(state.current, ruleLink);
  }
  return (
    `<section id="console"><h2>Query console</h2>` +
    `<form id="query-form">` +
    `<input id="query-input" type="text" spellcheck="false" ` +
    `placeholder="formal: from_zone=Trust to_zone=Untrust dst_ip=42.62.94.2 action=permit" ` +
    `value="${esc(state.consoleText)}">` +
    `<button type="submit" ${state.pending ? "disabled" : ""}>run</button></form>` +
    `<div id="console-result">${body}</div>` +
    `<h2>History</h2>${renderHistory(state)}</section>`
  );
}

export function renderWorkbench(state: WorkbenchState, ruleLink: (name: string) => string): string {
  const banner = state.banner
    ? `<div class="banner error" role="alert">${esc(state.banner)}</div>`
    : "";
  const witness = state.witnessReport
    ? `<section id="witness"><h2>Witness check</h2>${renderWitnessReport(state.witnessReport)}</section>`
    : "";
  return banner + renderClusterExplorer(state) + renderConsole(state, ruleLink) + witness;
}
