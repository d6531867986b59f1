// Thin typed client over the review service HTTP API. The fetch function is
// injectable so tests can run without a browser or a network.

import type { NextResponse, RatingPayload, StatsResponse } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service returned ${status}`);
  }
}

export class ReviewApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async next(annotator: string, subset?: string): Promise<NextResponse> {
    const params = new URLSearchParams({ annotator });
    if (subset) params.set("subset", subset);
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/next?${params}`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return (await resp.json()) as NextResponse;
  }

  async submitRating(payload: RatingPayload): Promise<void> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (resp.status !== 201) throw new ApiError(resp.status, await resp.json().catch(() => null));
  }

  async stats(): Promise<StatsResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/stats`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return (await resp.json()) as StatsResponse;
  }
}
