import type {
  ClusterSummary,
  ParseErrorResponse,
  ProjectionResponse,
  QueryResponse,
  RuleInfo,
  WitnessReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly body: ParseErrorResponse | null) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let body: ParseErrorResponse | null = null;
    try {
      body = (await response.json()) as ParseErrorResponse;
    } catch {
      body = null;
    }
    throw new ApiError(body?.error ?? `HTTP ${response.status}`, response.status, body);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  getClusters(): Promise<ClusterSummary[]> {
    return fetch(`${this.base}/api/clusters`).then((r) => asJson<ClusterSummary[]>(r));
  }

  getCluster(id: number): Promise<ClusterSummary> {
    return fetch(`${this.base}/api/clusters/${id}`).then((r) => asJson<ClusterSummary>(r));
  }

  getProjection(): Promise<ProjectionResponse> {
    return fetch(`${this.base}/api/projection`).then((r) => asJson<ProjectionResponse>(r));
  }

  submitQuery(text: string): Promise<QueryResponse> {
    return fetch(`${this.base}/api/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    }).then((r) => asJson<QueryResponse>(r));
  }

  witnessCheck(n: number, seed: number): Promise<WitnessReport> {
    return fetch(`${this.base}/api/witness-check`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ n, seed }),
    }).then((r) => asJson<WitnessReport>(r));
  }

  getRules(): Promise<RuleInfo[]> {
    return fetch(`${this.base}/api/rules`).then((r) => asJson<RuleInfo[]>(r));
  }

  ruleRegionUrl(name: string): string {
    return `${this.base}/api/rules/${encodeURIComponent(name)}/effective-region`;
  }
}
