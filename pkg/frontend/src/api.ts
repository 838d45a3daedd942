/**
 * Thin fetch client for the planner service. At most one forecast request
 * is in flight: submitting a new scenario aborts the previous call.
 */

import type {
  AdvertisersResponse,
  ClustersResponse,
  ForecastRequest,
  ForecastResponse,
  HistoryResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  private inflightForecast: AbortController | null = null;

  constructor(private baseUrl: string) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body.error ?? resp.statusText);
    }
    return body as T;
  }

  listAdvertisers(): Promise<AdvertisersResponse> {
    return this.getJson('/advertisers');
  }

  history(advertiserId: string): Promise<HistoryResponse> {
    return this.getJson(`/advertisers/${encodeURIComponent(advertiserId)}/history`);
  }

  clusters(): Promise<ClustersResponse> {
    return this.getJson('/clusters');
  }

  async forecast(request: ForecastRequest): Promise<ForecastResponse> {
    this.inflightForecast?.abort();
    const controller = new AbortController();
    this.inflightForecast = controller;
    try {
      const resp = await fetch(`${this.baseUrl}/forecast`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
      const body = await resp.json();
      if (!resp.ok) {
        throw new ApiError(resp.status, body.error ?? resp.statusText);
      }
      return body as ForecastResponse;
    } finally {
      if (this.inflightForecast === controller) {
        this.inflightForecast = null;
      }
    }
  }
}
