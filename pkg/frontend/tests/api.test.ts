import { afterEach, describe, expect, test, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

interface Call {
  url: string;
  method: string;
  body: unknown;
}

function stubFetch(
  respond: (call: Call) => { status?: number; doc: unknown },
): Call[] {
  const calls: Call[] = [];
  vi.stubGlobal(
    "fetch",
    async (url: string, init?: RequestInit): Promise<Response> => {
      const call: Call = {
        url,
        method: init?.method ?? "GET",
        body:
          typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
      };
      calls.push(call);
      const { status, doc } = respond(call);
      return new Response(JSON.stringify(doc), {
        status: status ?? 200,
        headers: { "content-type": "application/json" },
      });
    },
  );
  return calls;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  test("strips trailing slashes from the base url", () => {
    expect(new ApiClient("http://x:1//").baseUrl).toBe("http://x:1");
  });

  test("mutating calls carry the expected revision", async () => {
    const calls = stubFetch(() => ({ doc: { ok: true } }));
    const client = new ApiClient("http://svc");
    await client.createSession("q");
    await client.generate("s1", 0);
    await client.feedback("s1", 1, "do better");
    await client.feedbackTargeted("s1", 2, "tweak", [4]);
    await client.autoMerge("s1", 3, [2, 3]);
    await client.autoSplit("s1", 4, 6);
    await client.applyOps("s1", 5, [{ op: "set_task", id: 1, task: "t" }]);
    await client.execute("s1", 6);
    await client.execute("s1", 7, 2);
    await client.undo("s1", 8);
    await client.redo("s1", 9);

    expect(calls.map((c) => [c.method, c.url])).toEqual([
      ["POST", "http://svc/sessions"],
      ["POST", "http://svc/sessions/s1/generate"],
      ["POST", "http://svc/sessions/s1/feedback"],
      ["POST", "http://svc/sessions/s1/feedback/targeted"],
      ["POST", "http://svc/sessions/s1/auto-merge"],
      ["POST", "http://svc/sessions/s1/auto-split"],
      ["POST", "http://svc/sessions/s1/ops"],
      ["POST", "http://svc/sessions/s1/execute"],
      ["POST", "http://svc/sessions/s1/execute"],
      ["POST", "http://svc/sessions/s1/undo"],
      ["POST", "http://svc/sessions/s1/redo"],
    ]);
    expect(calls[0]!.body).toEqual({ query: "q" });
    expect(calls[1]!.body).toEqual({ expected_revision: 0 });
    expect(calls[3]!.body).toEqual({
      expected_revision: 2,
      text: "tweak",
      node_ids: [4],
    });
    expect(calls[4]!.body).toEqual({ expected_revision: 3, node_ids: [2, 3] });
    expect(calls[7]!.body).toEqual({ expected_revision: 6, node_id: null });
    expect(calls[8]!.body).toEqual({ expected_revision: 7, node_id: 2 });
  });

  test("read calls hit the expected paths", async () => {
    const calls = stubFetch(() => ({ doc: { sessions: [], events: [] } }));
    const client = new ApiClient("http://svc");
    await client.listSessions();
    await client.getPlan("s1");
    await client.getResults("s1");
    await client.getEvents("s1");
    await client.getOperation("s1", "op9");
    expect(calls.every((c) => c.method === "GET")).toBe(true);
    expect(calls.map((c) => c.url)).toEqual([
      "http://svc/sessions",
      "http://svc/sessions/s1/plan",
      "http://svc/sessions/s1/results",
      "http://svc/sessions/s1/events",
      "http://svc/sessions/s1/operations/op9",
    ]);
  });

  test("non-2xx responses raise ApiError with the unwrapped detail", async () => {
    stubFetch(() => ({
      status: 409,
      doc: { detail: { error: "revision-conflict", expected: 1, actual: 2 } },
    }));
    const client = new ApiClient("http://svc");
    const error = await client.undo("s1", 1).catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(409);
    expect((error as ApiError).isConflict).toBe(true);
    expect((error as ApiError).body).toEqual({
      error: "revision-conflict",
      expected: 1,
      actual: 2,
    });
  });

  test("pollOperation loops until the operation settles", async () => {
    let polls = 0;
    stubFetch(() => {
      polls += 1;
      return {
        doc:
          polls < 3
            ? { id: "op1", kind: "generate", status: "pending" }
            : { id: "op1", kind: "generate", status: "done", revision: 1 },
      };
    });
    const client = new ApiClient("http://svc");
    const op = await client.pollOperation("s1", "op1", 1);
    expect(op.status).toBe("done");
    expect(polls).toBe(3);
  });

  test("a failed operation resolves normally with its error doc", async () => {
    stubFetch(() => ({
      doc: {
        id: "op2",
        kind: "auto_merge",
        status: "failed",
        error: { error: "invalid_op", detail: "not-contractible" },
      },
    }));
    const client = new ApiClient("http://svc");
    const op = await client.pollOperation("s1", "op2", 1);
    expect(op.status).toBe("failed");
    expect(op.error).toEqual({ error: "invalid_op", detail: "not-contractible" });
  });
});
