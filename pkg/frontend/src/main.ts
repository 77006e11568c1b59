/**
 * Wiring: controls ↔ state ↔ gateway. The render core stays pure; this file
 * owns the DOM, the fetches, and the single-in-flight what-if gate.
 */

import { GatewayError, fetchCatalog, fetchDetail, postWhatIf } from './api.js';
import { mount } from './dom.js';
import { WhatIfGate } from './gate.js';
import { renderScenario } from './render.js';
import {
  applyError,
  applyResult,
  clampMultiplier,
  initialState,
  toggleSeries,
} from './state.js';
import {
  MULTIPLIER_MAX,
  MULTIPLIER_MIN,
  MULTIPLIER_STEP,
  ViewState,
} from './types.js';

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el;
};

const params = new URLSearchParams(window.location.search);
const BASE = params.get('base') ?? '';
const EXO = params.get('exo') ?? 'driver';

let state: ViewState = initialState(EXO);

const app = $('#app');
const slider = $<HTMLInputElement>('#multiplier');
const readout = $('#multiplier-value');
const exoInput = $<HTMLInputElement>('#exogenous');
const seriesList = $('#series-list');

slider.min = String(MULTIPLIER_MIN);
slider.max = String(MULTIPLIER_MAX);
slider.step = String(MULTIPLIER_STEP);
slider.value = String(state.multiplier);
exoInput.value = state.exogenous;

const render = (): void => {
  readout.textContent = `× ${state.multiplier.toFixed(2)}`;
  mount(app, renderScenario(state));
};

const gate = new WhatIfGate(
  (body, signal) => postWhatIf(BASE, body, signal),
  (resp) => {
    state = applyResult(state, resp);
    render();
  },
  (err) => {
    const message = err instanceof GatewayError ? err.message : String(err);
    state = applyError(state, message);
    render();
  }
);

const requestScenario = (): void => {
  if (state.selected.length === 0) return;
  state = { ...state, status: 'loading' };
  gate.submit({
    exogenous: state.exogenous,
    multiplier: state.multiplier,
    series: state.selected,
  });
};

const ensureDetail = async (sid: string): Promise<void> => {
  if (sid in state.details) return;
  try {
    const detail = await fetchDetail(BASE, sid);
    state = { ...state, details: { ...state.details, [sid]: detail } };
  } catch (err) {
    state = applyError(
      state,
      err instanceof GatewayError ? err.message : String(err)
    );
  }
};

const renderSeriesList = (): void => {
  seriesList.replaceChildren(
    ...state.catalog.map((entry) => {
      const label = document.createElement('label');
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.value = entry.id;
      box.checked = state.selected.includes(entry.id);
      box.addEventListener('change', () => {
        void onToggle(entry.id);
      });
      label.append(box, ` ${entry.id} (${entry.category})`);
      return label;
    })
  );
};

const onToggle = async (sid: string): Promise<void> => {
  state = toggleSeries(state, sid);
  await ensureDetail(sid);
  render();
  requestScenario();
};

slider.addEventListener('input', () => {
  state = { ...state, multiplier: clampMultiplier(Number(slider.value)) };
  render();
  requestScenario();
});

exoInput.addEventListener('change', () => {
  state = { ...state, exogenous: exoInput.value.trim() };
  requestScenario();
});

const boot = async (): Promise<void> => {
  try {
    const catalog = await fetchCatalog(BASE);
    state = { ...state, catalog };
    // start with the first couple of series selected so the page isn't blank
    for (const entry of catalog.slice(0, 2)) {
      state = toggleSeries(state, entry.id);
      await ensureDetail(entry.id);
    }
    renderSeriesList();
    render();
    requestScenario();
  } catch (err) {
    state = applyError(
      state,
      err instanceof GatewayError ? err.message : String(err)
    );
    render();
  }
};

void boot();
