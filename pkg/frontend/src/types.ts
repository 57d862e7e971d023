// Response shapes of the log2ns HTTP API. The UI renders these verbatim;
// it never derives verdicts, matches, or similarities on its own.

export type CountedValue = [string, number];
export type CountedZonePair = [[string, string], number];

export interface ClusterSummary {
  id: number;
  member_count: number;
  top_src_ips: CountedValue[];
  top_dst_ips: CountedValue[];
  top_applications: CountedValue[];
  top_zone_pairs: CountedZonePair[];
}

export interface ProjectionPoint {
  row: number;
  x: number;
  y: number;
  cluster: number;
}

export interface ProjectionResponse {
  k: number;
  points: ProjectionPoint[];
}

export interface Witness {
  from_zone: string;
  to_zone: string;
  src_ip: string;
  dst_ip: string;
  application: string;
  protocol: string;
  dst_port: number;
}

export interface SatVerdict {
  status: "SAT";
  action: "PERMIT" | "DENY";
  matched_rule: string;
  trace_lines: string[];
  witness: Witness | null;
}

export interface UnsatVerdict {
  status: "UNSAT";
  reason: string;
  field: string | null;
}

export type FormalVerdict = SatVerdict | UnsatVerdict;

export interface QueryEcho {
  mode: string;
  constraints: { field: string; op: string; value: unknown }[];
  desired_action: string | null;
  anchor: string | null;
  k: number | null;
  limit: number | null;
}

export interface QueryResponse {
  query: QueryEcho;
  provenance: "log_search" | "correlation" | "formal";
  escalated: boolean;
  elapsed_s: number;
  matches?: number[];
  neighbors?: [string, number][];
  verdict?: FormalVerdict;
}

export interface ParseErrorResponse {
  error: string;
  position?: number;
}

export interface WitnessFailure {
  row: number;
  constraints: Record<string, unknown>;
  reason: string;
}

export interface WitnessReport {
  sampled: number;
  passed: number;
  failures: WitnessFailure[];
}

export interface RuleInfo {
  index: number;
  name: string;
  action: string;
  shadowed: boolean;
  display: Record<string, unknown>;
}
