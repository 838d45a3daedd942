/**
 * Contract tests against recorded service fixtures: the UI renders real
 * payloads, displays only numbers originating from them, and breaks loudly
 * if the published schemas drift.
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import {
  renderAttentionHeatmap,
  renderCompareTable,
  renderDeltaStrip,
  renderForecastChart,
  renderHistoryChart,
  renderImportanceBars,
} from '../src/charts.js';
import { ScenarioState } from '../src/state.js';
import type { ForecastResponse, HistoryResponse } from '../src/types.js';
import { validateSchema, type Schema } from './schema.js';

function fixture<T>(name: string): T {
  return JSON.parse(
    readFileSync(join(process.cwd(), 'tests', 'fixtures', `${name}.json`), 'utf-8')) as T;
}

function publishedSchema(name: string): Schema {
  return JSON.parse(
    readFileSync(join(process.cwd(), '..', 'schemas', `${name}.json`), 'utf-8')) as Schema;
}

const history = fixture<HistoryResponse>('history');
const forecastPlain = fixture<ForecastResponse>('forecast_plain');
const forecastIdentity = fixture<ForecastResponse>('forecast_identity');
const forecastDoubled = fixture<ForecastResponse>('forecast_doubled');

function host(): HTMLElement {
  const el = document.createElement('div');
  document.body.appendChild(el);
  return el;
}

describe('published schema contract', () => {
  it('recorded fixtures validate against the published schemas', () => {
    validateSchema(fixture('advertisers'), publishedSchema('advertisers'));
    validateSchema(history, publishedSchema('history'));
    validateSchema(fixture('clusters'), publishedSchema('clusters'));
    for (const fc of [forecastPlain, forecastIdentity, forecastDoubled]) {
      validateSchema(fc, publishedSchema('forecast'));
    }
  });

  it('a drifted payload fails validation', () => {
    const broken = { ...forecastPlain, point: 'oops' };
    expect(() => validateSchema(broken, publishedSchema('forecast'))).toThrow(/expected array/);
  });
});

describe('history view', () => {
  it('renders one chart point per panel day', () => {
    const el = host();
    renderHistoryChart(el, history);
    const line = el.querySelector<SVGPolylineElement>('.cpc-line')!;
    expect(line.dataset.points).toBe(String(history.dates.length));
    expect(line.getAttribute('points')!.split(' ')).toHaveLength(history.cpc.length);
  });
});

describe('forecast view', () => {
  it('renders the quantile band and baseline curve', () => {
    const el = host();
    renderForecastChart(el, forecastPlain);
    expect(el.querySelector('.quantile-band')).not.toBeNull();
    expect(el.querySelector('.baseline-line')).not.toBeNull();
    expect(el.querySelector('.scenario-line')).toBeNull();
  });

  it('renders the scenario curve when present', () => {
    const el = host();
    renderForecastChart(el, forecastDoubled);
    expect(el.querySelector('.scenario-line')).not.toBeNull();
  });

  it('renders a 90-cell attention heatmap', () => {
    const el = host();
    renderAttentionHeatmap(el, forecastPlain.attention);
    expect(el.querySelectorAll('.attention-cell')).toHaveLength(90);
  });

  it('importance bars show exactly the service weights, competitors summed', () => {
    const el = host();
    renderImportanceBars(el, forecastPlain.encoder_importance);
    const rows = [...el.querySelectorAll<HTMLElement>('.importance-row:not(.drill)')];
    const competitorNames = Object.keys(forecastPlain.encoder_importance)
      .filter(n => n.startsWith('peer_') || n === 'cluster_mean_cpc');
    const expectedSum = competitorNames
      .reduce((a, n) => a + forecastPlain.encoder_importance[n], 0);
    const competitorsRow = rows.find(r => r.dataset.channel === 'competitors')!;
    expect(Number(competitorsRow.dataset.weight)).toBeCloseTo(expectedSum, 12);
    // non-competitor rows carry the fixture weights verbatim (no UI math)
    for (const row of rows) {
      const name = row.dataset.channel!;
      if (name !== 'competitors') {
        expect(Number(row.dataset.weight)).toBe(forecastPlain.encoder_importance[name]);
      }
    }
  });

  it('competitors bar drills down to individual peers on click', () => {
    const el = host();
    renderImportanceBars(el, forecastPlain.encoder_importance);
    const drill = el.querySelector<HTMLElement>('.competitor-drilldown')!;
    expect(drill.hidden).toBe(true);
    el.querySelector<HTMLElement>('[data-channel="competitors"]')!.click();
    expect(drill.hidden).toBe(false);
    expect(drill.querySelectorAll('.importance-row.drill').length)
      .toBeGreaterThanOrEqual(1);
  });
});

describe('delta strip', () => {
  it('identity scenario renders an all-zero strip', () => {
    const el = host();
    expect(forecastIdentity.delta!.every(v => v === 0)).toBe(true);
    renderDeltaStrip(el, forecastIdentity.delta);
    const cells = [...el.querySelectorAll<SVGRectElement>('.delta-cell')];
    expect(cells).toHaveLength(forecastIdentity.delta!.length);
    expect(cells.every(c => Number(c.dataset.value) === 0)).toBe(true);
  });

  it('cells carry the service delta values verbatim', () => {
    const el = host();
    renderDeltaStrip(el, forecastDoubled.delta);
    const values = [...el.querySelectorAll<SVGRectElement>('.delta-cell')]
      .map(c => Number(c.dataset.value));
    expect(values).toEqual(forecastDoubled.delta);
  });

  it('renders nothing without a scenario', () => {
    const el = host();
    renderDeltaStrip(el, undefined);
    expect(el.querySelectorAll('.delta-cell')).toHaveLength(0);
  });
});

describe('compare view', () => {
  function seededState(): ScenarioState {
    const state = new ScenarioState();
    state.horizon = forecastIdentity.horizon;
    state.initializePlan(forecastIdentity.dates,
                         history.adbudget[history.adbudget.length - 1]);
    return state;
  }

  it('two identical scenarios produce identical rows', () => {
    const state = seededState();
    const plan = fixture<Array<{ date: string; amount: number }>>('identity_plan');
    state.recordScenario('a', plan, forecastIdentity);
    state.recordScenario('b', plan, forecastIdentity);
    const rows = state.compareRows();
    expect(rows[0].meanCpc).toBe(rows[1].meanCpc);
    expect(rows[0].totalBudget).toBe(rows[1].totalBudget);

    const el = host();
    renderCompareTable(el, rows, () => undefined);
    const rendered = [...el.querySelectorAll('tr')].slice(1)
      .map(tr => [...tr.querySelectorAll('td')].slice(1, 4).map(td => td.textContent));
    expect(rendered[0]).toEqual(rendered[1]);
  });

  it('row ordering is stable under re-render', () => {
    const state = seededState();
    state.recordScenario('first', fixture('identity_plan'), forecastIdentity);
    state.recordScenario('second', fixture('doubled_plan'), forecastDoubled);
    const once = state.compareRows().map(r => r.label);
    const twice = state.compareRows().map(r => r.label);
    expect(once).toEqual(twice);
  });

  it('promoting a row makes its plan the editor starting plan', () => {
    const state = seededState();
    const doubled = fixture<Array<{ date: string; amount: number }>>('doubled_plan');
    state.recordScenario('identity', fixture('identity_plan'), forecastIdentity);
    state.recordScenario('doubled', doubled, forecastDoubled);

    const el = host();
    renderCompareTable(el, state.compareRows(), i => state.promoteScenario(i));
    const buttons = [...el.querySelectorAll<HTMLButtonElement>('.promote-button')];
    buttons[1].click();
    expect(state.baselinePlan).toEqual(doubled);
    expect(state.currentPlan()).toEqual(doubled);
  });
});
