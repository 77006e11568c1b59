/**
 * SVG line-chart geometry for one series: observed history, baseline
 * forecast, and (when a scenario is loaded) the scenario overlay.
 *
 * Pure functions over service payloads. Coordinates are rounded to 2
 * decimals so snapshots are stable across platforms.
 */

import { SeriesDetail, WhatIfRow } from './types.js';
import { VNode, h } from './vnode.js';

export interface ChartGeometry {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = {
  width: 860,
  height: 260,
  padLeft: 48,
  padRight: 12,
  padTop: 10,
  padBottom: 46,
};

const r2 = (x: number): number => Math.round(x * 100) / 100;

export const linePoints = (
  xs: number[],
  ys: number[]
): string => xs.map((x, i) => `${r2(x)},${r2(ys[i]!)}`).join(' ');

/**
 * One <figure> per series. Month labels are emitted verbatim from the
 * service payloads — one tick per month, history first, then the forecast
 * months (from the scenario response when present, else the baseline
 * forecast block).
 */
export const seriesChart = (
  detail: SeriesDetail,
  row: WhatIfRow | null,
  geom: ChartGeometry = DEFAULT_GEOMETRY
): VNode => {
  const histMonths = detail.history.months;
  const histValues = detail.history.values;
  const fcMonths = row ? row.months : detail.forecast.months;
  const baseline = row ? row.baseline : detail.forecast.values;
  const scenario = row ? row.scenario : null;

  const months = [...histMonths, ...fcMonths];
  const all = [...histValues, ...baseline, ...(scenario ?? [])];
  const lo = Math.min(0, ...all);
  const hi = Math.max(1e-9, ...all);

  const innerW = geom.width - geom.padLeft - geom.padRight;
  const innerH = geom.height - geom.padTop - geom.padBottom;
  const xAt = (i: number): number =>
    geom.padLeft + (months.length === 1 ? 0 : (i * innerW) / (months.length - 1));
  const yAt = (v: number): number =>
    geom.padTop + innerH - ((v - lo) / (hi - lo)) * innerH;

  const histXs = histValues.map((_, i) => xAt(i));
  // forecast curves start at the first month after history
  const fcXs = baseline.map((_, i) => xAt(histMonths.length + i));

  const ticks = months.map((label, i) =>
    h(
      'text',
      {
        class: 'tick',
        x: String(r2(xAt(i))),
        y: String(geom.height - 6),
        'text-anchor': 'end',
        transform: `rotate(-60 ${r2(xAt(i))} ${geom.height - 6})`,
      },
      label
    )
  );

  const axisValues = [lo, (lo + hi) / 2, hi].map((v) =>
    h(
      'text',
      {
        class: 'axis-value',
        x: String(geom.padLeft - 6),
        y: String(r2(yAt(v) + 3)),
        'text-anchor': 'end',
      },
      v.toFixed(1)
    )
  );

  const curves: VNode[] = [
    h('polyline', {
      class: 'curve history',
      fill: 'none',
      points: linePoints(histXs, histValues.map(yAt)),
    }),
    h('polyline', {
      class: 'curve baseline',
      fill: 'none',
      points: linePoints(fcXs, baseline.map(yAt)),
    }),
  ];
  if (scenario) {
    curves.push(
      h('polyline', {
        class: 'curve scenario',
        fill: 'none',
        points: linePoints(fcXs, scenario.map(yAt)),
      })
    );
  }

  const divider = h('line', {
    class: 'forecast-divider',
    x1: String(r2(xAt(histMonths.length))),
    x2: String(r2(xAt(histMonths.length))),
    y1: String(geom.padTop),
    y2: String(geom.padTop + innerH),
  });

  return h(
    'figure',
    { class: 'series-chart', 'data-series': detail.id },
    h('figcaption', {}, `${detail.id} — ${detail.category}`),
    h(
      'svg',
      {
        viewBox: `0 0 ${geom.width} ${geom.height}`,
        role: 'img',
        'aria-label': `history and forecasts for ${detail.id}`,
      },
      divider,
      ...curves,
      h('g', { class: 'month-axis' }, ...ticks),
      h('g', { class: 'value-axis' }, ...axisValues)
    )
  );
};
