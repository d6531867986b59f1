// Wire types for the review service API.

export type AxisKey = "relevance_detail" | "hallucination" | "fluency";

export const AXIS_KEYS: AxisKey[] = ["relevance_detail", "hallucination", "fluency"];

export type Level = 1 | 2 | 3 | 4 | 5;

export interface Sample {
  record_id: string;
  subset: string;
  caption: string;
  image_url: string;
}

export interface NextResponse {
  exhausted?: boolean;
  record_id?: string;
  subset?: string;
  caption?: string;
  image_url?: string;
}

export interface RatingPayload {
  annotator_id: string;
  record_id: string;
  relevance_detail: Level;
  hallucination: Level;
  fluency: Level;
}

export interface AxisStats {
  count: number;
  mean: number | null;
  std: number | null;
}

export interface StatsResponse {
  count: number;
  overall: Record<AxisKey, AxisStats>;
  subsets: Record<string, Record<AxisKey, AxisStats>>;
}
