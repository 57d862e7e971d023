import type {
  ClusterSummary,
  ParseErrorResponse,
  ProjectionResponse,
  QueryResponse,
  WitnessReport,
} from "./types.js";

export interface HistoryEntry {
  text: string;
  provenance: string;
  escalated: boolean;
  at: string;
  result: QueryResponse;
}

export interface ConsoleError {
  text: string;
  message: string;
  position: number | null;
}

export interface WorkbenchState {
  clusters: ClusterSummary[] | null;
  projection: ProjectionResponse | null;
  selectedCluster: number | null;
  consoleText: string;
  pending: boolean;
  current: QueryResponse | null;
  consoleError: ConsoleError | null;
  history: HistoryEntry[];
  witnessReport: WitnessReport | null;
  banner: string | null;
}

export function initialState(): WorkbenchState {
  return {
    clusters: null,
    projection: null,
    selectedCluster: null,
    consoleText: "",
    pending: false,
    current: null,
    consoleError: null,
    history: [],
    witnessReport: null,
    banner: null,
  };
}

// State transitions are pure: they return a new state and never mutate the
// history of an existing one (history is append-only within a session).

export function withQueryResult(
  state: WorkbenchState,
  text: string,
  result: QueryResponse,
  at: string,
): WorkbenchState {
  const entry: HistoryEntry = {
    text,
    provenance: result.provenance,
    escalated: result.escalated,
    at,
    result,
  };
  return {
    ...state,
    pending: false,
    current: result,
    consoleError: null,
    history: [...state.history, entry],
  };
}

export function withQueryError(
  state: WorkbenchState,
  text: string,
  body: ParseErrorResponse | null,
  fallback: string,
): WorkbenchState {
  return {
    ...state,
    pending: false,
    current: null,
    consoleError: {
      text,
      message: body?.error ?? fallback,
      position: body?.position ?? null,
    },
  };
}

export function clusterQueryText(summary: ClusterSummary): string {
  // pre-fill the console from a cluster's top fields
  const parts: string[] = [];
  if (summary.top_dst_ips.length > 0) {
    const dsts = summary.top_dst_ips.slice(0, 2).map(([v]) => v);
    parts.push(dsts.length === 1 ? `dst_ip=${dsts[0]}` : `dst_ip in {${dsts.join(", ")}}`);
  }
  if (summary.top_applications.length > 0) {
    parts.push(`application=${summary.top_applications[0][0]}`);
  }
  parts.push("action=permit");
  return `formal: ${parts.join(" ")}`;
}
