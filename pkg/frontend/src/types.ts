/** JSON shapes of the /api/v1 service. */

export interface SegmentInfo {
  id: number;
  bbox: [number, number, number, number];
  pixels: number;
}

export interface FrameResponse {
  time: string;
  shape: [number, number];
  grid: string; // base64 little-endian float32, row-major
  extent: number[];
  segments: SegmentInfo[];
}

export interface TimesResponse {
  times: string[];
}

export interface ConceptScore {
  concept_id: number;
  probability: number;
  uncertainty: number;
}

export interface NeighborEntry {
  row: number;
  distance: number;
  timestamp: string;
  segment_id: number;
  top_concepts: ConceptScore[];
}

export interface QueryResponse {
  query: { timestamp?: string; segment_id?: number };
  concepts_used: number[];
  query_concepts: ConceptScore[];
  exhausted: boolean;
  neighbors: NeighborEntry[];
  concept_names: Record<string, string>;
}

export interface PerturbResponse {
  time: string;
  concept_id: number;
  shape: [number, number];
  baseline: number[][];
  perturbed: Record<string, number[][]>;
}

export interface LogEntry {
  id: number;
  wall_time: string;
  query_time: string;
  status: "success" | "error";
  message: string;
  latency_ms: number;
}

export interface LogsResponse {
  entries: LogEntry[];
}

export interface ConceptInfo {
  concept_id: number;
  name: string;
  source: string;
}

export interface ConceptsResponse {
  concepts: ConceptInfo[];
}
