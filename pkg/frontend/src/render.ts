/**
 * The pure render core: ViewState in, virtual view out. No fetching, no DOM,
 * no globals — this is the module the snapshot tests exercise against
 * recorded gateway responses.
 */

import { seriesChart } from './chart.js';
import { ViewState, WhatIfRow } from './types.js';
import { VNode, h } from './vnode.js';

const mean = (xs: number[]): number =>
  xs.reduce((a, b) => a + b, 0) / xs.length;

/**
 * Per-series % change in mean forecast — the one computation the UI performs
 * on service numbers. Multiplier 1.0 responses echo the baseline exactly, so
 * this is exactly 0 there, not merely close.
 */
export const deltaPercent = (row: WhatIfRow): number | null => {
  const base = mean(row.baseline);
  if (base === 0) return null;
  return ((mean(row.scenario) - base) / base) * 100;
};

export const formatPercent = (pct: number | null): string => {
  if (pct === null) return 'n/a';
  if (pct === 0) return '0.0%';
  const body = Math.abs(pct).toFixed(1);
  return pct > 0 ? `+${body}%` : `−${body}%`;
};

const banner = (state: ViewState): VNode | null =>
  state.errorMessage === null
    ? null
    : h(
        'div',
        { class: 'banner error', role: 'alert' },
        `Service error: ${state.errorMessage} — showing the last good scenario.`
      );

const rowFor = (state: ViewState, sid: string): WhatIfRow | null =>
  state.curves?.series.find((r) => r.id === sid) ?? null;

const charts = (state: ViewState): VNode => {
  if (state.selected.length === 0) {
    return h(
      'section',
      { class: 'charts empty' },
      h('p', { class: 'empty-note' }, 'No series selected.')
    );
  }
  const figures = state.selected
    .filter((sid) => sid in state.details)
    .map((sid) => seriesChart(state.details[sid]!, rowFor(state, sid)));
  return h('section', { class: 'charts' }, ...figures);
};

const deltaTable = (state: ViewState): VNode | null => {
  if (state.curves === null || state.selected.length === 0) return null;
  const rows = state.selected
    .map((sid) => rowFor(state, sid))
    .filter((r): r is WhatIfRow => r !== null);
  if (rows.length === 0) return null;

  const deltas = rows.map(deltaPercent);
  const known = deltas.filter((d): d is number => d !== null);
  const aggregate = known.length ? mean(known) : null;

  return h(
    'table',
    { class: 'delta-table' },
    h(
      'thead',
      {},
      h(
        'tr',
        {},
        h('th', {}, 'series'),
        h('th', {}, 'mean baseline'),
        h('th', {}, 'mean scenario'),
        h('th', {}, 'Δ mean forecast')
      )
    ),
    h(
      'tbody',
      {},
      ...rows.map((row, i) =>
        h(
          'tr',
          { 'data-series': row.id },
          h('td', {}, row.id),
          h('td', { class: 'num' }, mean(row.baseline).toFixed(2)),
          h('td', { class: 'num' }, mean(row.scenario).toFixed(2)),
          h('td', { class: 'num delta' }, formatPercent(deltas[i]!))
        )
      ),
      h(
        'tr',
        { class: 'aggregate' },
        h('td', {}, 'all selected (mean)'),
        h('td', {}, ''),
        h('td', {}, ''),
        h('td', { class: 'num delta' }, formatPercent(aggregate))
      )
    )
  );
};

export const renderScenario = (state: ViewState): VNode => {
  const head =
    state.curves === null
      ? 'Baseline forecast'
      : `Scenario: ${state.curves.exogenous} × ${state.curves.multiplier.toFixed(2)}`;
  return h(
    'div',
    { class: 'scenario-view', 'data-status': state.status },
    banner(state),
    h('h2', {}, head),
    charts(state),
    deltaTable(state)
  );
};
