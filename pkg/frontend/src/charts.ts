/**
 * SVG renderers. Every number drawn here comes straight from a service
 * response; the only arithmetic is coordinate mapping.
 */

import type { ForecastFields, ForecastResponse, HistoryResponse } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K, attrs: Record<string, string | number>): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return v => lo + ((v - min) / span) * (hi - lo);
}

function polyline(points: string, stroke: string, width = 1.5): SVGPolylineElement {
  return svgElement('polyline', {
    points, fill: 'none', stroke, 'stroke-width': width,
  });
}

export function renderHistoryChart(host: HTMLElement, history: HistoryResponse,
                                   width = 720, height = 200): void {
  host.replaceChildren();
  const svg = svgElement('svg', { width, height, class: 'history-chart' });
  const n = history.cpc.length;
  const x = (i: number) => (i / Math.max(n - 1, 1)) * (width - 20) + 10;
  const yCpc = scale(history.cpc, height - 15, 10);
  const yBudget = scale(history.adbudget, height - 15, 10);

  svg.appendChild(polyline(
    history.adbudget.map((v, i) => `${x(i)},${yBudget(v)}`).join(' '), '#b8c4d8', 1));
  const cpcLine = polyline(
    history.cpc.map((v, i) => `${x(i)},${yCpc(v)}`).join(' '), '#1f77b4');
  cpcLine.classList.add('cpc-line');
  cpcLine.dataset.points = String(n);
  svg.appendChild(cpcLine);
  host.appendChild(svg);
}

function bandPath(x: (i: number) => number, y: (v: number) => number,
                  lower: number[], upper: number[]): string {
  const forward = upper.map((v, i) => `${x(i)},${y(v)}`).join(' L');
  const back = [...lower].reverse()
    .map((v, idx) => `${x(lower.length - 1 - idx)},${y(v)}`).join(' L');
  return `M${forward} L${back} Z`;
}

export function renderForecastChart(host: HTMLElement, baseline: ForecastResponse,
                                    width = 720, height = 220): void {
  host.replaceChildren();
  const svg = svgElement('svg', { width, height, class: 'forecast-chart' });
  const scenario = baseline.scenario;
  const h = baseline.point.length;
  const x = (i: number) => (i / Math.max(h - 1, 1)) * (width - 20) + 10;

  const allValues = baseline.quantile_band.flat()
    .concat(scenario ? scenario.quantile_band.flat() : []);
  const y = scale(allValues, height - 15, 10);

  const lower = baseline.quantile_band.map(row => row[0]);
  const upper = baseline.quantile_band.map(row => row[row.length - 1]);
  const band = svgElement('path', {
    d: bandPath(x, y, lower, upper), fill: '#1f77b4', opacity: 0.15,
  });
  band.classList.add('quantile-band');
  svg.appendChild(band);

  const base = polyline(baseline.point.map((v, i) => `${x(i)},${y(v)}`).join(' '), '#1f77b4');
  base.classList.add('baseline-line');
  svg.appendChild(base);

  if (scenario) {
    const line = polyline(scenario.point.map((v, i) => `${x(i)},${y(v)}`).join(' '), '#d62728');
    line.classList.add('scenario-line');
    svg.appendChild(line);
  }
  host.appendChild(svg);
}

/** Horizontal delta strip: one cell per horizon day, sign-coloured. */
export function renderDeltaStrip(host: HTMLElement, delta: number[] | undefined,
                                 width = 720, height = 26): void {
  host.replaceChildren();
  if (!delta) {
    return;
  }
  const svg = svgElement('svg', { width, height, class: 'delta-strip' });
  const cellWidth = (width - 20) / delta.length;
  const magnitude = Math.max(...delta.map(Math.abs), 1e-12);
  delta.forEach((value, i) => {
    const rect = svgElement('rect', {
      x: 10 + i * cellWidth, y: 4, width: Math.max(cellWidth - 1, 1), height: height - 8,
      fill: value === 0 ? '#e8e8e8' : value < 0 ? '#2ca02c' : '#d62728',
      opacity: value === 0 ? 0.8 : 0.25 + 0.75 * (Math.abs(value) / magnitude),
    });
    rect.classList.add('delta-cell');
    rect.dataset.value = String(value);
    svg.appendChild(rect);
  });
  host.appendChild(svg);
}

export interface ImportanceBarsOptions {
  /** Channels folded into the single "competitors" bar. */
  competitorPrefix?: string;
  clusterMeanName?: string;
}

/**
 * Sorted horizontal importance bars. Competitor CPC channels are summed
 * into one bar; clicking it toggles the per-peer drill-down.
 */
export function renderImportanceBars(host: HTMLElement,
                                     importance: Record<string, number>,
                                     options: ImportanceBarsOptions = {}): void {
  const prefix = options.competitorPrefix ?? 'peer_';
  const clusterMean = options.clusterMeanName ?? 'cluster_mean_cpc';
  host.replaceChildren();

  const competitors: Array<[string, number]> = [];
  const rest: Array<[string, number]> = [];
  for (const [name, weight] of Object.entries(importance)) {
    (name.startsWith(prefix) || name === clusterMean ? competitors : rest).push([name, weight]);
  }
  const rows: Array<[string, number, boolean]> = rest.map(([n, w]) => [n, w, false]);
  if (competitors.length > 0) {
    rows.push(['competitors', competitors.reduce((a, [, w]) => a + w, 0), true]);
  }
  rows.sort((a, b) => b[1] - a[1]);

  const list = document.createElement('div');
  list.className = 'importance-bars';
  const maxWeight = Math.max(...rows.map(r => r[1]), 1e-12);
  for (const [name, weight, isCompetitors] of rows) {
    const row = document.createElement('div');
    row.className = 'importance-row';
    row.dataset.channel = name;
    row.dataset.weight = String(weight);
    const label = document.createElement('span');
    label.className = 'importance-label';
    label.textContent = name;
    const bar = document.createElement('span');
    bar.className = 'importance-bar';
    bar.style.width = `${(weight / maxWeight) * 100}%`;
    const value = document.createElement('span');
    value.className = 'importance-value';
    value.textContent = (weight * 100).toFixed(1) + '%';
    row.append(label, bar, value);
    list.appendChild(row);

    if (isCompetitors) {
      const drill = document.createElement('div');
      drill.className = 'competitor-drilldown';
      drill.hidden = true;
      for (const [peer, w] of competitors.sort((a, b) => b[1] - a[1])) {
        const peerRow = document.createElement('div');
        peerRow.className = 'importance-row drill';
        peerRow.dataset.channel = peer;
        peerRow.dataset.weight = String(w);
        peerRow.textContent = `${peer}: ${(w * 100).toFixed(1)}%`;
        drill.appendChild(peerRow);
      }
      row.addEventListener('click', () => {
        drill.hidden = !drill.hidden;
      });
      list.appendChild(drill);
    }
  }
  host.appendChild(list);
}

/** One-row heatmap over the encoder days (90 cells under the default window). */
export function renderAttentionHeatmap(host: HTMLElement, attention: number[],
                                       width = 720, height = 34): void {
  host.replaceChildren();
  const svg = svgElement('svg', { width, height, class: 'attention-heatmap' });
  const cellWidth = (width - 20) / attention.length;
  const peak = Math.max(...attention, 1e-12);
  attention.forEach((weight, i) => {
    const rect = svgElement('rect', {
      x: 10 + i * cellWidth, y: 4, width: Math.max(cellWidth - 0.5, 0.5),
      height: height - 8, fill: '#d62728', opacity: 0.05 + 0.95 * (weight / peak),
    });
    rect.classList.add('attention-cell');
    rect.dataset.weight = String(weight);
    svg.appendChild(rect);
  });
  host.appendChild(svg);
}

/** Side-by-side scenario table; the chosen row becomes the next baseline. */
export function renderCompareTable(host: HTMLElement,
                                   rows: Array<{ label: string; meanCpc: number;
                                                totalBudget: number; impliedCost: number }>,
                                   onPromote: (index: number) => void): void {
  host.replaceChildren();
  const table = document.createElement('table');
  table.className = 'compare-table';
  const head = document.createElement('tr');
  for (const title of ['scenario', 'mean forecast CPC', 'total planned budget',
                       'implied total cost', '']) {
    const th = document.createElement('th');
    th.textContent = title;
    head.appendChild(th);
  }
  table.appendChild(head);
  rows.forEach((row, index) => {
    const tr = document.createElement('tr');
    tr.dataset.label = row.label;
    for (const cell of [row.label, row.meanCpc.toFixed(4),
                        row.totalBudget.toFixed(2), row.impliedCost.toFixed(2)]) {
      const td = document.createElement('td');
      td.textContent = cell;
      tr.appendChild(td);
    }
    const action = document.createElement('td');
    const button = document.createElement('button');
    button.textContent = 'use as baseline';
    button.className = 'promote-button';
    button.addEventListener('click', () => onPromote(index));
    action.appendChild(button);
    tr.appendChild(action);
    table.appendChild(tr);
  });
  host.appendChild(table);
}
