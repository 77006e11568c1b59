/**
 * Wire formats of the forecasting gateway, plus the single view-state record
 * the whole UI renders from. Every number shown on screen originates in one
 * of these payloads; the UI's only arithmetic is the %-delta column.
 */

/** Row of GET /api/series. */
export interface SeriesListEntry {
  id: string;
  category: string;
}

/** Months are always "YYYY-MM" strings, exactly as the service sends them. */
export interface CurveBlock {
  months: string[];
  values: number[];
}

/** GET /api/series/{id}: observed history plus the baseline forecast. */
export interface SeriesDetail {
  id: string;
  category: string;
  history: CurveBlock;
  forecast: CurveBlock;
}

/** One series inside a POST /api/whatif response. */
export interface WhatIfRow {
  id: string;
  months: string[];
  baseline: number[];
  scenario: number[];
}

export interface WhatIfResponse {
  exogenous: string;
  multiplier: number;
  horizon: number;
  series: WhatIfRow[];
}

export interface WhatIfRequest {
  exogenous: string;
  multiplier: number;
  series?: string[];
}

/** Error body the gateway sends with 4xx statuses. */
export interface ServiceError {
  error: string;
  detail: string;
}

export type RequestStatus = 'idle' | 'loading' | 'ok' | 'error';

/** Slider bounds; requests are valid by construction because the slider is
 * the only way to set the multiplier. */
export const MULTIPLIER_MIN = 0.8;
export const MULTIPLIER_MAX = 1.2;
export const MULTIPLIER_STEP = 0.01;

export interface ViewState {
  catalog: SeriesListEntry[];
  selected: string[];
  exogenous: string;
  multiplier: number;
  /** Detail payloads keyed by series id, fetched lazily on selection. */
  details: Record<string, SeriesDetail>;
  /** Most recent *successful* what-if response; never cleared on error. */
  curves: WhatIfResponse | null;
  status: RequestStatus;
  /** Human-readable note for the banner; null when the banner is hidden. */
  errorMessage: string | null;
}
