/**
 * Payload types mirroring the service's published JSON schemas
 * (schemas/*.json in the repository root). The UI renders exclusively from
 * these shapes; it never computes forecast numbers itself.
 */

export interface AdvertiserInfo {
  id: string;
  category: string;
}

export interface AdvertisersResponse {
  advertisers: AdvertiserInfo[];
}

export interface HistoryResponse {
  id: string;
  category: string;
  dates: string[];
  cpc: number[];
  adbudget: number[];
  adclicks: number[];
  impressions?: number[];
}

export interface ClusterRecord {
  method: string;
  k: number;
  labels: Record<string, number>;
  wcss_by_k?: Record<string, number>;
}

export interface ClustersResponse {
  assignments: Record<string, ClusterRecord>;
  contingency_vs_category: Record<string, { table: number[][]; ari: number }>;
}

export interface ForecastFields {
  dates: string[];
  point: number[];
  quantiles: number[];
  quantile_band: number[][];
  encoder_importance: Record<string, number>;
  decoder_importance: Record<string, number>;
  attention: number[];
  model_kind: string;
}

export interface ForecastResponse extends ForecastFields {
  advertiser_id: string;
  config_tag: string;
  horizon: number;
  competitors_total?: number;
  scenario?: ForecastFields;
  delta?: number[];
}

export interface BudgetPlanEntry {
  date: string;
  amount: number;
}

export interface ForecastRequest {
  advertiser_id: string;
  config_tag: string;
  horizon: number;
  budget_plan?: BudgetPlanEntry[];
}

/** One submitted scenario kept in the session-local compare history. */
export interface ScenarioRecord {
  label: string;
  plan: BudgetPlanEntry[];
  response: ForecastResponse;
}
