// Typed client for the campaign service. Every shape here mirrors a service
// payload field for field; the console adds nothing of its own.

export interface GenomePayload {
  base: number[];
  z: number[] | null;
}

export interface CampaignConfigPayload {
  populationSize: number;
  mutationRate: number;
  maxMutationStep: number;
  zMode: boolean;
  mode: string;
  warmupGenerations: number;
  evaluationBudget: number;
  seed: number;
  fitnessScale: number | null;
  stopThreshold: number | null;
  targetGenome: GenomePayload | null;
}

export interface CampaignRecord {
  id: string;
  createdAt: string;
  status: string;
  oracle: string;
  config: CampaignConfigPayload;
  generation: number;
  evaluations: number;
  bestFitness: number | null;
}

export interface PendingRequest {
  requestId: string;
  genomeHash: string;
  genome: GenomePayload;
  stlUrl: string;
}

export interface HistoryPoint {
  evaluations: number;
  bestFitness: number;
}

export interface SlicePayload {
  genomeHash: string;
  gridSize: number;
  cells: [number, number][];
}

export interface CreateCampaignBody {
  oracle: string;
  evaluationBudget: number;
  seed: number;
  mode: string;
  zMode?: boolean;
  warmupGenerations?: number;
  populationSize?: number;
  targetGenome?: number[];
}

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(response: Response): Promise<ApiError> {
  let message = response.statusText || `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") message = body.detail;
    else if (body.detail) message = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body, keep the status text
  }
  return new ApiError(response.status, message);
}

export class ApiClient {
  baseUrl: string;
  private fetchFn: FetchFn;

  constructor(baseUrl = "", fetchFn?: FetchFn) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  private async getJson<T>(path: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, { signal });
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as T;
  }

  listCampaigns(signal?: AbortSignal): Promise<CampaignRecord[]> {
    return this.getJson("/campaigns", signal);
  }

  getCampaign(id: string, signal?: AbortSignal): Promise<CampaignRecord> {
    return this.getJson(`/campaigns/${id}`, signal);
  }

  getPending(id: string, signal?: AbortSignal): Promise<PendingRequest[]> {
    return this.getJson(`/campaigns/${id}/pending`, signal);
  }

  async getHistory(id: string, signal?: AbortSignal): Promise<HistoryPoint[]> {
    const payload = await this.getJson<{ series: HistoryPoint[] }>(
      `/campaigns/${id}/history`,
      signal,
    );
    return payload.series;
  }

  getSlice(id: string, designHash: string, signal?: AbortSignal): Promise<SlicePayload> {
    return this.getJson(`/campaigns/${id}/designs/${designHash}/slice`, signal);
  }

  stlHref(stlUrl: string): string {
    return this.baseUrl + stlUrl;
  }

  async createCampaign(body: CreateCampaignBody): Promise<CampaignRecord> {
    const response = await this.fetchFn(`${this.baseUrl}/campaigns`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as CampaignRecord;
  }

  async submitMeasurement(id: string, requestId: string, rpm: number): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/campaigns/${id}/measurements`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ requestId, rpm }),
    });
    if (!response.ok) throw await errorFrom(response);
    await response.json();
  }
}
