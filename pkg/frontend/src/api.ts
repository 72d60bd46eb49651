/**
 * Typed client for the planweave session service.
 *
 * Every mutating call carries the revision it was computed against; the
 * server answers 409 when the session has moved on, surfaced here as an
 * ApiError with status 409 so the caller can show a conflict banner.
 */

export interface VarBindingDoc {
  variable: string;
  value: string;
}

export interface TraceDoc {
  agent: string;
  raw_log: string;
  structured: Record<string, unknown>;
  values: Record<string, unknown>;
}

export interface NodeDoc {
  id: number;
  task: string;
  agent_name: string;
  input: VarBindingDoc[];
  output: string[];
  prereq: number[];
  status?: string;
  trace?: TraceDoc;
}

export interface EdgeDoc {
  src_node: number;
  dest_node: number;
  src_output: string;
  dest_input: string;
}

export interface PlanDoc {
  nodes: NodeDoc[];
  edges: EdgeDoc[];
  next_id: number;
}

export interface DiffDoc {
  nodes_added: number[];
  nodes_removed: number[];
  nodes_modified: number[];
  edges_added: number;
  edges_removed: number;
  text: string;
}

export interface EventDoc {
  seq: number;
  timestamp: number;
  kind: string;
  payload: Record<string, unknown> & { diff?: DiffDoc };
}

export interface PlanResponse {
  revision: number;
  plan: PlanDoc;
}

export interface SessionSummary {
  id: string;
  query: string;
  revision: number;
}

export interface ResultsDoc {
  revision: number;
  statuses: Record<string, string>;
  sink: { node_id: number; values: Record<string, unknown> } | null;
}

export interface OperationDoc {
  id: string;
  kind: string;
  status: "pending" | "done" | "failed";
  revision?: number;
  plan?: PlanDoc;
  error?: Record<string, unknown>;
}

export interface StartedOperation {
  operation_id: string;
  status: string;
}

export type ExecuteResponse = PlanResponse & { results: ResultsDoc };

/** Non-2xx response; `body` is the server's JSON error detail. */
export class ApiError extends Error {
  readonly status: number;
  readonly body: Record<string, unknown>;

  constructor(status: number, body: Record<string, unknown>) {
    super(`api error ${status}: ${JSON.stringify(body)}`);
    this.status = status;
    this.body = body;
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function request<T>(
  baseUrl: string,
  method: string,
  path: string,
  body?: unknown,
): Promise<T> {
  const response = await fetch(baseUrl + path, {
    method,
    headers: body === undefined ? {} : { "content-type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const doc = (await response.json()) as Record<string, unknown>;
  if (!response.ok) {
    // FastAPI wraps error payloads as {"detail": {...}}.
    const detail = doc["detail"];
    throw new ApiError(
      response.status,
      (typeof detail === "object" && detail !== null
        ? detail
        : doc) as Record<string, unknown>,
    );
  }
  return doc as T;
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  createSession(query: string): Promise<PlanResponse & { id: string }> {
    return request(this.baseUrl, "POST", "/sessions", { query });
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return request(this.baseUrl, "GET", "/sessions");
  }

  getPlan(sessionId: string): Promise<PlanResponse> {
    return request(this.baseUrl, "GET", `/sessions/${sessionId}/plan`);
  }

  getResults(sessionId: string): Promise<ResultsDoc> {
    return request(this.baseUrl, "GET", `/sessions/${sessionId}/results`);
  }

  getEvents(sessionId: string): Promise<{ events: EventDoc[] }> {
    return request(this.baseUrl, "GET", `/sessions/${sessionId}/events`);
  }

  getOperation(sessionId: string, opId: string): Promise<OperationDoc> {
    return request(
      this.baseUrl,
      "GET",
      `/sessions/${sessionId}/operations/${opId}`,
    );
  }

  generate(sessionId: string, expectedRevision: number): Promise<StartedOperation> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/generate`, {
      expected_revision: expectedRevision,
    });
  }

  feedback(
    sessionId: string,
    expectedRevision: number,
    text: string,
  ): Promise<StartedOperation> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/feedback`, {
      expected_revision: expectedRevision,
      text,
    });
  }

  feedbackTargeted(
    sessionId: string,
    expectedRevision: number,
    text: string,
    nodeIds: number[],
  ): Promise<StartedOperation> {
    return request(
      this.baseUrl,
      "POST",
      `/sessions/${sessionId}/feedback/targeted`,
      { expected_revision: expectedRevision, text, node_ids: nodeIds },
    );
  }

  autoMerge(
    sessionId: string,
    expectedRevision: number,
    nodeIds: number[],
  ): Promise<StartedOperation> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/auto-merge`, {
      expected_revision: expectedRevision,
      node_ids: nodeIds,
    });
  }

  autoSplit(
    sessionId: string,
    expectedRevision: number,
    nodeId: number,
  ): Promise<StartedOperation> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/auto-split`, {
      expected_revision: expectedRevision,
      node_id: nodeId,
    });
  }

  applyOps(
    sessionId: string,
    expectedRevision: number,
    ops: Record<string, unknown>[],
  ): Promise<PlanResponse> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/ops`, {
      expected_revision: expectedRevision,
      ops,
    });
  }

  execute(
    sessionId: string,
    expectedRevision: number,
    nodeId?: number,
  ): Promise<ExecuteResponse> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/execute`, {
      expected_revision: expectedRevision,
      node_id: nodeId ?? null,
    });
  }

  undo(sessionId: string, expectedRevision: number): Promise<PlanResponse> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/undo`, {
      expected_revision: expectedRevision,
    });
  }

  redo(sessionId: string, expectedRevision: number): Promise<PlanResponse> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/redo`, {
      expected_revision: expectedRevision,
    });
  }

  /**
   * Poll a pending operation until it is done or failed. Resolves with the
   * final operation doc; a failed operation is a normal resolution (its
   * `error` field carries the server's classification), not a rejection.
   */
  async pollOperation(
    sessionId: string,
    opId: string,
    intervalMs = 50,
    timeoutMs = 15000,
  ): Promise<OperationDoc> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const op = await this.getOperation(sessionId, opId);
      if (op.status !== "pending") {
        return op;
      }
      if (Date.now() > deadline) {
        throw new Error(`operation ${opId} still pending after ${timeoutMs}ms`);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
