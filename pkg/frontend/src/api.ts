/**
 * Typed client for the consultation service.
 *
 * Sending an answer retries on network failure: the server treats a replay
 * of the last applied answer as idempotent, so a retry can never double-count
 * a firing. Server errors carry `{code, message, details}` and surface as
 * ApiError with the machine-readable code intact.
 */

import type {
  ApiErrorBody,
  AuditEntry,
  CaseInfo,
  DiscoveryCommitResponse,
  DiscoveryTemplate,
  Explanation,
  FactBody,
  GeneralizationReport,
  InduceResponse,
  RuleInfo,
  SchemaInfo,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface ApiClientOptions {
  retries?: number;
  retryDelayMs?: number;
  fetchFn?: typeof fetch;
}

export class ApiClient {
  private readonly retries: number;
  private readonly retryDelayMs: number;
  private readonly fetchFn: typeof fetch;

  constructor(
    readonly baseUrl: string,
    options: ApiClientOptions = {},
  ) {
    this.retries = options.retries ?? 3;
    this.retryDelayMs = options.retryDelayMs ?? 250;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    { retry = false } = {},
  ): Promise<T> {
    const attempts = retry ? this.retries : 1;
    let lastError: unknown = null;
    for (let attempt = 1; attempt <= attempts; attempt++) {
      try {
        const response = await this.fetchFn(`${this.baseUrl}${path}`, {
          method,
          headers: body === undefined ? {} : { "content-type": "application/json" },
          body: body === undefined ? undefined : JSON.stringify(body),
        });
        if (!response.ok) {
          // A definite server answer: do not retry, surface the code.
          const errorBody = (await response.json()) as ApiErrorBody;
          throw new ApiError(response.status, errorBody);
        }
        return (await response.json()) as T;
      } catch (error) {
        if (error instanceof ApiError) throw error;
        lastError = error;
        if (attempt < attempts) {
          await new Promise((resolve) => setTimeout(resolve, this.retryDelayMs * attempt));
        }
      }
    }
    throw lastError instanceof Error ? lastError : new Error(String(lastError));
  }

  private async requestText(path: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, { method: "GET" });
    if (!response.ok) {
      throw new ApiError(response.status, (await response.json()) as ApiErrorBody);
    }
    return response.text();
  }

  startSession(goal?: string, facts?: Record<string, string>): Promise<SessionView> {
    const body: Record<string, unknown> = {};
    if (goal) body.goal = goal;
    if (facts && Object.keys(facts).length) body.facts = facts;
    return this.request<SessionView>("POST", "/sessions", body);
  }

  getSession(id: string): Promise<SessionView> {
    return this.request<SessionView>("GET", `/sessions/${id}`);
  }

  /** Retried: the server's answer contract is idempotent per sequence. */
  answer(id: string, attribute: string, value: string): Promise<SessionView> {
    return this.request<SessionView>(
      "POST",
      `/sessions/${id}/answer`,
      { attribute, value },
      { retry: true },
    );
  }

  explanation(id: string, mode: "why" | "how"): Promise<Explanation> {
    return this.request<Explanation>("GET", `/sessions/${id}/explanation?mode=${mode}`);
  }

  openDiscovery(id: string): Promise<DiscoveryTemplate> {
    return this.request<DiscoveryTemplate>("POST", `/sessions/${id}/discovery`);
  }

  commitDiscovery(
    id: string,
    premises: FactBody[],
    conclusion: FactBody,
    expert: string,
    override = false,
  ): Promise<DiscoveryCommitResponse> {
    return this.request<DiscoveryCommitResponse>(
      "POST",
      `/sessions/${id}/discovery/commit`,
      { premises, conclusion, expert, override },
    );
  }

  abortDiscovery(id: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${id}/discovery/abort`);
  }

  rules(): Promise<RuleInfo[]> {
    return this.request<RuleInfo[]>("GET", "/kb/rules");
  }

  cases(): Promise<CaseInfo[]> {
    return this.request<CaseInfo[]>("GET", "/kb/cases");
  }

  audit(): Promise<AuditEntry[]> {
    return this.request<AuditEntry[]>("GET", "/kb/audit");
  }

  schema(): Promise<SchemaInfo> {
    return this.request<SchemaInfo>("GET", "/kb/schema");
  }

  experienceReport(): Promise<string> {
    return this.requestText("/kb/experience-report");
  }

  induce(emit = false): Promise<InduceResponse> {
    return this.request<InduceResponse>("POST", "/kb/induce", { emit });
  }

  generalize(mode: string, threshold: number, dryRun: boolean): Promise<GeneralizationReport> {
    return this.request<GeneralizationReport>("POST", "/kb/generalize", {
      mode,
      threshold,
      dry_run: dryRun,
    });
  }
}
