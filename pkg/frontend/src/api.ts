/** Typed client for the knowledge base service.
 *
 * Every method maps to exactly one endpoint; only postVerdict and
 * startIteration mutate anything, and both carry a caller-chosen request_id
 * so a retried request is replayed from the server cache instead of acting
 * twice.
 */

export type Side = "L" | "R" | "";
export type Decision = "approve" | "reject";

export interface StatusPayload {
  iteration: number;
  profile: string | null;
  corpus_fingerprint: string | null;
  assertions: Record<string, number>;
  queue_size: number;
  blacklist_size: number;
  trusted_patterns: number;
  categories: string[];
  relations: string[];
  iteration_running: boolean;
  last_iteration_error: string | null;
  iterations_available: boolean;
}

export interface QueueItem {
  id: string;
  predicate: string;
  args: string[];
  score: number;
  evidence: [string, Side, number][];
  queued_at: number;
  human_readable: string;
}

export interface QueuePage {
  total: number;
  items: QueueItem[];
}

export interface AssertionPayload {
  id: string;
  predicate: string;
  args: string[];
  status: string;
  score: number;
  iteration: number;
  evidence: [string, Side, number][];
  timestamp: string;
  human_readable: string;
}

export interface InstancePage {
  predicate: string;
  total: number;
  offset: number;
  items: AssertionPayload[];
}

export interface VerdictResult {
  id: string;
  decision: Decision;
  assertion: AssertionPayload;
}

export interface ProvenanceEvent {
  event: string;
  timestamp: string;
  iteration?: number;
  score?: number;
  evidence?: [string, Side, number][];
  decision?: Decision;
  supervisor?: string;
}

export interface ProvenancePayload {
  predicate: string;
  args: string[];
  status: string;
  blacklisted: boolean;
  events: ProvenanceEvent[];
  human_readable: string;
}

export interface IterationStarted {
  state: string;
  iteration: number;
}

export interface IterationDetail {
  number: number;
  profile: string;
  fingerprint: string;
  stats: Record<string, number>;
  queued: unknown[];
  expired: [string, string[]][];
  trusted_scores: [string, string, Side, number, number][];
  timestamp: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText || `HTTP ${response.status}`;
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async get<T>(path: string, params?: Record<string, string>): Promise<T> {
    let url = this.baseUrl + path;
    if (params) {
      const query = new URLSearchParams(params).toString();
      if (query) url += `?${query}`;
    }
    const response = await fetch(url);
    if (!response.ok) throw new ApiError(response.status, await parseDetail(response));
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(response.status, await parseDetail(response));
    return (await response.json()) as T;
  }

  status(): Promise<StatusPayload> {
    return this.get("/status");
  }

  queue(predicate?: string | null, limit = 200): Promise<QueuePage> {
    const params: Record<string, string> = { limit: String(limit) };
    if (predicate) params.predicate = predicate;
    return this.get("/queue", params);
  }

  postVerdict(
    id: string,
    decision: Decision,
    supervisor: string,
    requestId: string,
  ): Promise<VerdictResult> {
    return this.post("/verdicts", {
      id,
      decision,
      supervisor,
      request_id: requestId,
    });
  }

  instances(
    kind: "category" | "relation",
    name: string,
    options: { status?: string; limit?: number; offset?: number } = {},
  ): Promise<InstancePage> {
    const params: Record<string, string> = {
      limit: String(options.limit ?? 25),
      offset: String(options.offset ?? 0),
    };
    if (options.status) params.status = options.status;
    const plural = kind === "category" ? "categories" : "relations";
    return this.get(`/kb/${plural}/${encodeURIComponent(name)}/instances`, params);
  }

  provenance(predicate: string, args: string[]): Promise<ProvenancePayload> {
    const params = new URLSearchParams({ predicate });
    for (const arg of args) params.append("args", arg);
    return this.get(`/kb/provenance?${params.toString()}`);
  }

  startIteration(requestId: string): Promise<IterationStarted> {
    return this.post("/iterations", { request_id: requestId });
  }

  iterationDetail(number: number): Promise<IterationDetail> {
    return this.get(`/iterations/${number}`);
  }
}
