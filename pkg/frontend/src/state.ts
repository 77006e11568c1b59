/**
 * View-state transitions. All pure; the DOM layer calls these and re-renders.
 */

import {
  MULTIPLIER_MAX,
  MULTIPLIER_MIN,
  MULTIPLIER_STEP,
  ViewState,
  WhatIfResponse,
} from './types.js';

export const initialState = (exogenous: string): ViewState => ({
  catalog: [],
  selected: [],
  exogenous,
  multiplier: 1.0,
  details: {},
  curves: null,
  status: 'idle',
  errorMessage: null,
});

/**
 * Snap to the slider grid and clamp to its bounds. The slider already
 * enforces this in the browser; clamping again keeps the invariant when the
 * value arrives from a URL parameter or a test.
 */
export const clampMultiplier = (raw: number): number => {
  if (!Number.isFinite(raw)) return 1.0;
  const snapped = Math.round(raw / MULTIPLIER_STEP) * MULTIPLIER_STEP;
  const clamped = Math.min(MULTIPLIER_MAX, Math.max(MULTIPLIER_MIN, snapped));
  // one step is 0.01, so two decimals is exact
  return Number(clamped.toFixed(2));
};

/** A successful what-if response replaces the curves and clears the banner. */
export const applyResult = (state: ViewState, resp: WhatIfResponse): ViewState => ({
  ...state,
  curves: resp,
  status: 'ok',
  errorMessage: null,
});

/**
 * A failed request raises the banner but keeps the stale curves on screen —
 * the analyst can still see the last good comparison while retrying.
 */
export const applyError = (state: ViewState, message: string): ViewState => ({
  ...state,
  status: 'error',
  errorMessage: message,
});

export const toggleSeries = (state: ViewState, sid: string): ViewState => {
  const selected = state.selected.includes(sid)
    ? state.selected.filter((s) => s !== sid)
    : [...state.selected, sid];
  return { ...state, selected };
};
