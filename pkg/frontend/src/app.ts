/**
 * DOM controller for the scenario planner.
 *
 * Flow: pick an advertiser -> history chart + cluster panel load and the
 * plan editor prefills from the last stored monthly budget -> edit monthly
 * buckets (or daily amounts in advanced mode) -> submit -> baseline vs
 * scenario curves, delta strip, importance bars, attention heatmap ->
 * compare submitted scenarios and promote one as the next baseline.
 */

import { ApiClient, ApiError } from './api.js';
import {
  renderAttentionHeatmap,
  renderCompareTable,
  renderDeltaStrip,
  renderForecastChart,
  renderHistoryChart,
  renderImportanceBars,
} from './charts.js';
import { ScenarioState } from './state.js';
import type { ClustersResponse, ForecastResponse } from './types.js';

export class PlannerApp {
  readonly state = new ScenarioState();
  private clusters: ClustersResponse | null = null;

  constructor(private api: ApiClient, private root: Document | HTMLElement = document) {}

  private el<T extends HTMLElement>(id: string): T {
    const found = (this.root instanceof Document ? this.root : this.root.ownerDocument!)
      .getElementById(id);
    if (!found) {
      throw new Error(`missing element #${id}`);
    }
    return found as T;
  }

  private banner(message: string, retry?: () => void): void {
    const host = this.el<HTMLElement>('banner');
    host.replaceChildren();
    if (!message) {
      return;
    }
    const box = document.createElement('div');
    box.className = 'error-banner';
    box.textContent = message;
    if (retry) {
      const button = document.createElement('button');
      button.textContent = 'retry';
      button.addEventListener('click', retry);
      box.appendChild(button);
    }
    host.appendChild(box);
  }

  async start(): Promise<void> {
    try {
      const { advertisers } = await this.api.listAdvertisers();
      const select = this.el<HTMLSelectElement>('advertiser-select');
      select.replaceChildren();
      for (const adv of advertisers) {
        const option = document.createElement('option');
        option.value = adv.id;
        option.textContent = `${adv.id} (${adv.category})`;
        select.appendChild(option);
      }
      select.addEventListener('change', () => this.loadAdvertiser(select.value));
      this.el<HTMLButtonElement>('submit-scenario')
        .addEventListener('click', () => this.submitScenario());
      if (advertisers.length) {
        await this.loadAdvertiser(advertisers[0].id);
      }
    } catch (err) {
      this.banner(`service unreachable: ${String(err)}`, () => this.start());
    }
  }

  async loadAdvertiser(advertiserId: string): Promise<void> {
    this.banner('');
    try {
      const history = await this.api.history(advertiserId);
      this.state.advertiserId = advertiserId;
      this.state.history = history;
      this.state.scenarios = [];
      renderHistoryChart(this.el('history-chart'), history);

      try {
        this.clusters = await this.api.clusters();
      } catch {
        this.clusters = null; // clusters may not be computed yet
      }
      this.renderClusterPanel(advertiserId);

      const lastBudget = history.adbudget[history.adbudget.length - 1];
      const horizonDates = this.nextDates(history.dates[history.dates.length - 1],
                                          this.state.horizon);
      this.state.initializePlan(horizonDates, lastBudget);
      this.renderPlanEditor();
      this.renderOutputs(null);
    } catch (err) {
      this.banner(`failed to load advertiser: ${String(err)}`,
                  () => this.loadAdvertiser(advertiserId));
    }
  }

  /** Calendar days following the last history date. */
  private nextDates(lastDate: string, count: number): string[] {
    const out: string[] = [];
    const cursor = new Date(`${lastDate}T00:00:00Z`);
    for (let i = 0; i < count; i++) {
      cursor.setUTCDate(cursor.getUTCDate() + 1);
      out.push(cursor.toISOString().slice(0, 10));
    }
    return out;
  }

  private renderClusterPanel(advertiserId: string): void {
    const host = this.el<HTMLElement>('cluster-panel');
    host.replaceChildren();
    if (!this.clusters) {
      host.textContent = 'clusters not computed yet';
      return;
    }
    for (const record of Object.values(this.clusters.assignments)) {
      const mine = record.labels[advertiserId];
      if (mine === undefined) {
        continue;
      }
      const peers = Object.entries(record.labels)
        .filter(([id, cluster]) => cluster === mine && id !== advertiserId)
        .map(([id]) => id);
      const row = document.createElement('div');
      row.className = 'cluster-row';
      row.dataset.method = record.method;
      row.textContent = `${record.method}: cluster ${mine} of ${record.k} — peers: ` +
        (peers.length ? peers.join(', ') : 'none');
      host.appendChild(row);
    }
  }

  renderPlanEditor(): void {
    const host = this.el<HTMLElement>('plan-editor');
    host.replaceChildren();
    for (const bucket of this.state.buckets) {
      const row = document.createElement('label');
      row.className = 'bucket-row';
      row.textContent = bucket.month + ' ';
      const input = document.createElement('input');
      input.type = 'number';
      input.value = String(bucket.amount);
      input.dataset.month = bucket.month;
      input.addEventListener('change', () => {
        this.state.setMonthBucket(bucket.month, Number(input.value));
      });
      row.appendChild(input);
      host.appendChild(row);
    }
  }

  async submitScenario(): Promise<void> {
    this.banner('');
    const plan = this.state.currentPlan();
    try {
      const response = await this.api.forecast({
        advertiser_id: this.state.advertiserId,
        config_tag: this.state.configTag,
        horizon: this.state.horizon,
        budget_plan: plan,
      });
      this.state.lastBaseline = response;
      this.state.recordScenario(`scenario ${this.state.scenarios.length + 1}`,
                                plan, response);
      this.renderOutputs(response);
      this.renderCompare();
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        this.banner(`${err.message} — pick a multivariate config`, undefined);
      } else {
        this.banner(`forecast failed: ${String(err)}`, () => this.submitScenario());
      }
    }
  }

  renderOutputs(response: ForecastResponse | null): void {
    const forecastHost = this.el<HTMLElement>('forecast-chart');
    const deltaHost = this.el<HTMLElement>('delta-strip');
    const encHost = this.el<HTMLElement>('encoder-importance');
    const decHost = this.el<HTMLElement>('decoder-importance');
    const attnHost = this.el<HTMLElement>('attention-heatmap');
    if (!response) {
      for (const host of [forecastHost, deltaHost, encHost, decHost, attnHost]) {
        host.replaceChildren();
      }
      return;
    }
    renderForecastChart(forecastHost, response);
    renderDeltaStrip(deltaHost, response.delta);
    renderImportanceBars(encHost, response.encoder_importance);
    renderImportanceBars(decHost, response.decoder_importance);
    renderAttentionHeatmap(attnHost, response.attention);
  }

  renderCompare(): void {
    renderCompareTable(this.el('compare-view'), this.state.compareRows(), index => {
      this.state.promoteScenario(index);
      this.renderPlanEditor();
    });
  }
}

export function boot(baseUrl: string): PlannerApp {
  const app = new PlannerApp(new ApiClient(baseUrl));
  void app.start();
  return app;
}
