/**
 * Typed client for the session service. Thin by design: it parses JSON,
 * attaches HTTP status context to failures, and hands payloads through
 * without reshaping them, so what the render layer sees is byte-for-byte
 * what the service said.
 *
 * The fetch function is injected to keep the client testable against
 * recorded fixtures and to let the app pin a base URL at startup.
 */

import type {
  ApiError,
  CreateSessionBody,
  DiagnosticsResponse,
  EstimateReport,
  NextResponse,
  PreviewBody,
  FunctionDraws,
  SessionSummary,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  readonly status: number;
  readonly kind: string | undefined;

  constructor(status: number, kind: string | undefined, detail: string) {
    super(detail);
    this.name = 'ServiceError';
    this.status = status;
    this.kind = kind;
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn: FetchLike = fetch.bind(globalThis)) {
    this.base = baseUrl.replace(/\/+$/, '');
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { 'content-type': 'application/json' } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(`${this.base}${path}`, init);
    const text = await resp.text();
    let parsed: unknown = null;
    if (text.length > 0) {
      try {
        parsed = JSON.parse(text);
      } catch {
        throw new ServiceError(resp.status, undefined, `non-JSON response: ${text.slice(0, 200)}`);
      }
    }
    if (!resp.ok) {
      const err = (parsed ?? {}) as ApiError & { detail?: unknown };
      const detail = typeof err.detail === 'string' ? err.detail : JSON.stringify(err.detail ?? text);
      throw new ServiceError(resp.status, err.error, detail);
    }
    return parsed as T;
  }

  createSession(body: CreateSessionBody): Promise<SessionSummary> {
    return this.request('POST', '/sessions', body);
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request('GET', `/sessions/${id}`);
  }

  next(id: string): Promise<NextResponse> {
    return this.request('POST', `/sessions/${id}/next`);
  }

  respond(id: string, r: 0 | 1): Promise<SessionSummary> {
    return this.request('POST', `/sessions/${id}/respond`, { r });
  }

  estimate(id: string, seed = 0, samples = 4000): Promise<EstimateReport> {
    return this.request('GET', `/sessions/${id}/estimate?seed=${seed}&samples=${samples}`);
  }

  diagnostics(id: string, seed = 0, draws = 30, replicates = 20): Promise<DiagnosticsResponse> {
    return this.request(
      'GET',
      `/sessions/${id}/diagnostics?seed=${seed}&draws=${draws}&replicates=${replicates}`,
    );
  }

  priorPreview(body: PreviewBody): Promise<FunctionDraws> {
    return this.request('POST', '/priors/preview', body);
  }
}
