// Typed client for the review service. The UI talks to the five documented
// endpoints and nothing else; batch entries structurally cannot carry group
// labels or classifier scores because the server strips them.

export interface Recommendation {
  issue_key: string;
  score: number;
  summary: string;
  description: string;
}

export interface RecommendationResponse {
  commit_hash: string;
  commit_message: string;
  changed_paths: string[];
  recommendations: Recommendation[];
}

export interface BatchEntry {
  commit_hash: string;
  commit_message: string;
  changed_paths: string[];
  issue_key: string;
  issue_summary: string;
  issue_description: string;
}

export interface BatchResponse {
  batch_id: string;
  entries: BatchEntry[];
}

export interface StatsResponse {
  project_key: string;
  issues: number;
  commits: number;
  links_by_origin: Record<string, number>;
  verdicts: number;
}

export interface KappaResponse {
  batch_id: string;
  kappa: number | null;
  raters: number;
  degenerate?: boolean;
  reason?: string;
}

export interface VerdictRequest {
  commit_hash: string;
  issue_key: string;
  decision: 'accept' | 'reject';
  rater_id: string;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private projectKey: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}/api/projects/${this.projectKey}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.url(path), init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === 'string') detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  getRecommendations(commitHash: string, k: number): Promise<RecommendationResponse> {
    return this.request(`/commits/${commitHash}/recommendations?k=${k}`);
  }

  getBatch(batchId: string): Promise<BatchResponse> {
    return this.request(`/review-batches/${batchId}`);
  }

  postVerdict(verdict: VerdictRequest): Promise<unknown> {
    return this.request('/verdicts', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(verdict),
    });
  }

  getStats(): Promise<StatsResponse> {
    return this.request('/stats');
  }

  getKappa(batchId: string): Promise<KappaResponse> {
    return this.request(`/kappa?batch=${batchId}`);
  }
}
