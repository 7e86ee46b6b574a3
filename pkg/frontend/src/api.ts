/** Thin fetch-based client for the flowviz REST API. Mutations send the
 * bearer token when one is configured; reads go out bare. */

import type { ApiError, RunRecord, ToolContract, WorkflowSpec } from './types.js';

export interface ToolSummary {
  name: string;
  kind: string;
  description?: string;
}

export class ServerError extends Error {
  readonly error: ApiError;

  constructor(error: ApiError) {
    super(error.detail);
    this.name = 'ServerError';
    this.error = error;
  }
}

export class FlowvizClient {
  readonly baseUrl: string;
  token: string | null;

  constructor(baseUrl: string, token: string | null = null) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers['Content-Type'] = 'application/json';
    if (method !== 'GET' && this.token) headers['Authorization'] = `Bearer ${this.token}`;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let parsed: ApiError;
      try {
        parsed = JSON.parse(text) as ApiError;
      } catch {
        parsed = { status: response.status, code: 'HTTP_ERROR', detail: text || response.statusText };
      }
      throw new ServerError(parsed);
    }
    return (text ? JSON.parse(text) : null) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/api/health');
  }

  registerTool(contract: ToolContract): Promise<ToolContract> {
    return this.request('POST', '/api/tools', contract);
  }

  listTools(): Promise<ToolSummary[]> {
    return this.request('GET', '/api/tools');
  }

  getTool(name: string): Promise<ToolContract> {
    return this.request('GET', `/api/tools/${encodeURIComponent(name)}`);
  }

  deleteTool(name: string): Promise<void> {
    return this.request('DELETE', `/api/tools/${encodeURIComponent(name)}`);
  }

  createWorkflow(spec: WorkflowSpec): Promise<unknown> {
    return this.request('POST', '/api/workflows', spec);
  }

  listWorkflows(): Promise<Array<{ name: string; owner: string }>> {
    return this.request('GET', '/api/workflows');
  }

  getWorkflow(name: string): Promise<WorkflowSpec> {
    return this.request('GET', `/api/workflows/${encodeURIComponent(name)}`);
  }

  deleteWorkflow(name: string): Promise<void> {
    return this.request('DELETE', `/api/workflows/${encodeURIComponent(name)}`);
  }

  triggerRun(workflowName: string, runAt?: string): Promise<RunRecord> {
    const body = runAt === undefined ? {} : { runAt };
    return this.request('POST', `/api/workflows/${encodeURIComponent(workflowName)}/runs`, body);
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.request('GET', `/api/runs/${encodeURIComponent(runId)}`);
  }

  cancelRun(runId: string): Promise<RunRecord> {
    return this.request('POST', `/api/runs/${encodeURIComponent(runId)}/cancel`);
  }

  async taskLog(runId: string, taskId: string): Promise<string> {
    const response = await fetch(
      `${this.baseUrl}/api/runs/${encodeURIComponent(runId)}/tasks/${encodeURIComponent(taskId)}/log`,
    );
    if (!response.ok) {
      throw new ServerError({
        status: response.status,
        code: 'HTTP_ERROR',
        detail: `log fetch failed with ${response.status}`,
      });
    }
    return response.text();
  }

  async runDsl(runId: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/api/runs/${encodeURIComponent(runId)}/dsl`);
    if (!response.ok) {
      throw new ServerError({
        status: response.status,
        code: 'HTTP_ERROR',
        detail: `dsl fetch failed with ${response.status}`,
      });
    }
    return response.text();
  }
}
