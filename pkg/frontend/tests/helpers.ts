import type { SessionView } from "../src/types.js";

/** Route-based fetch mock recording every request in order. */
export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

export type RouteHandler = (req: RecordedRequest) => { status?: number; body: unknown };

export function mockFetch(routes: Record<string, RouteHandler>) {
  const requests: RecordedRequest[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = new URL(String(input), "http://mock");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const recorded = { method, path: url.pathname + url.search, body };
    requests.push(recorded);
    const key = `${method} ${url.pathname}`;
    const handler = routes[key] ?? routes[`${method} *`];
    if (!handler) {
      return new Response(JSON.stringify({ code: "no_route", message: key, details: null }),
        { status: 404, headers: { "content-type": "application/json" } });
    }
    const result = handler(recorded);
    return new Response(JSON.stringify(result.body), {
      status: result.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
  return { fetchFn, requests };
}

export function view(partial: Partial<SessionView>): SessionView {
  return {
    id: "s1",
    goal: "hbv",
    status: "active",
    facts: {},
    answers_applied: 0,
    pending_question: null,
    result: null,
    ...partial,
  };
}

export function question(attribute: string, answers: string[] = ["yes", "no", "unknown"]) {
  return { attribute, prompt: `What is the value of ${attribute}?`, answers };
}

export async function waitFor<T>(
  probe: () => T | null | undefined | false,
  timeoutMs = 10000,
): Promise<T> {
  const started = Date.now();
  for (;;) {
    const result = probe();
    if (result) return result as T;
    if (Date.now() - started > timeoutMs) {
      throw new Error("timed out waiting for condition");
    }
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}
