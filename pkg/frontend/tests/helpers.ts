// Shared test scaffolding: an in-memory fake of the campaign service that
// records every request the console makes, plus a condition waiter.

import type { FetchFn } from "../src/api.js";

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

export type RouteHandler = (
  request: RecordedRequest,
) => { status?: number; json: unknown } | Promise<{ status?: number; json: unknown }>;

export class FakeService {
  requests: RecordedRequest[] = [];
  private routes = new Map<string, RouteHandler>();

  /** Register a handler for "METHOD /path". */
  on(method: string, path: string, handler: RouteHandler): void {
    this.routes.set(`${method} ${path}`, handler);
  }

  onJson(method: string, path: string, json: unknown, status = 200): void {
    this.on(method, path, () => ({ status, json }));
  }

  fetchFn(): FetchFn {
    return async (url, init) => {
      const method = (init?.method ?? "GET").toUpperCase();
      const path = url.replace(/^https?:\/\/[^/]+/, "");
      const body = typeof init?.body === "string" ? JSON.parse(init.body) : null;
      const recorded = { method, path, body };
      this.requests.push(recorded);
      const handler = this.routes.get(`${method} ${path}`);
      if (!handler) {
        return jsonResponse({ detail: "Not Found" }, 404);
      }
      const result = await handler(recorded);
      return jsonResponse(result.json, result.status ?? 200);
    };
  }

  mutations(): RecordedRequest[] {
    return this.requests.filter((r) => r.method !== "GET");
  }
}

export function jsonResponse(json: unknown, status = 200): Response {
  return new Response(JSON.stringify(json), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export async function until(
  condition: () => boolean,
  timeoutMs = 10_000,
  stepMs = 20,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (condition()) return;
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
  throw new Error("condition not reached in time");
}

export function campaignRecord(overrides: Record<string, unknown> = {}): any {
  return {
    id: "c1",
    createdAt: "2026-08-19T00:00:00+00:00",
    status: "awaiting-measurement",
    oracle: "manual",
    config: {
      populationSize: 20,
      mutationRate: 0.25,
      maxMutationStep: 10,
      zMode: false,
      mode: "surrogate",
      warmupGenerations: 0,
      evaluationBudget: 26,
      seed: 0,
      fitnessScale: null,
      stopThreshold: null,
      targetGenome: null,
    },
    generation: 0,
    evaluations: 0,
    bestFitness: null,
    ...overrides,
  };
}

export function pendingRequest(n: number): any {
  const id = `req-${String(n).padStart(6, "0")}`;
  return {
    requestId: id,
    genomeHash: `${n}`.repeat(4).padEnd(64, "f"),
    genome: { base: [1, 2, 3, 4, 5, 6, 7, 8, 9, 10], z: null },
    stlUrl: `/campaigns/c1/designs/h${n}/stl`,
  };
}
