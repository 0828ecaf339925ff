/** Typed client for the retrieval service HTTP API. */

export interface RankedResult {
  doc_id: string;
  start: number;
  end: number;
  node_type: string;
  score: number;
  matched_concepts: string[];
}

export interface SearchResponse {
  user_id: string;
  query_vector: Record<string, number>;
  results: RankedResult[];
}

export interface HistoryEntry {
  timestamp: number;
  vector: Record<string, number>;
}

export interface ProfileResponse {
  user_id: string;
  ontology_fingerprint: string;
  weights: Record<string, number>;
  history: HistoryEntry[];
}

export interface RegisterResponse {
  user_id: string;
  interests: number;
}

export interface NodeChild {
  start: number;
  node_type: string;
  name: string | null;
}

export interface NodeContext {
  doc_id: string;
  start: number;
  end: number;
  parent: number;
  node_type: string;
  name: string | null;
  value: string | null;
  path: string[];
  text_content?: string;
  children?: NodeChild[];
}

export interface HealthResponse {
  status: string;
  version: string;
  ontology_fingerprint: string;
  index_fingerprint: string;
  weighting: string;
  concepts: number;
  documents: number;
  text_nodes: number;
}

export interface SearchRequest {
  user_id: string;
  query?: string;
  concept?: string;
  k?: number;
  overlap_filter?: boolean;
  personalize?: boolean;
  learn?: boolean;
}

/** Error carrying the HTTP status and the service's detail message. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText || "request failed";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    return (await response.json()) as T;
  }

  register(userId: string): Promise<RegisterResponse> {
    return this.request<RegisterResponse>("/users", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ user_id: userId }),
    });
  }

  profile(userId: string): Promise<ProfileResponse> {
    return this.request<ProfileResponse>(
      `/users/${encodeURIComponent(userId)}/profile`,
    );
  }

  search(body: SearchRequest): Promise<SearchResponse> {
    return this.request<SearchResponse>("/search", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  node(docId: string, start: number): Promise<NodeContext> {
    return this.request<NodeContext>(
      `/documents/${encodeURIComponent(docId)}/nodes/${start}`,
    );
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/health");
  }
}
