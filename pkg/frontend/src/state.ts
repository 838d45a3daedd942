/**
 * Session-local scenario state: the editable plan, the latest baseline and
 * scenario responses, and the compare history. Nothing here is persisted
 * to the server.
 */

import type {
  BudgetPlanEntry,
  ForecastResponse,
  HistoryResponse,
  ScenarioRecord,
} from './types.js';
import { bucketsFromDaily, expandBuckets, horizonMonths, plansEqual, totalPlanned, type MonthBucket } from './plan.js';

export class ScenarioState {
  advertiserId = '';
  configTag = 'tft.multivar.comp.dist';
  horizon = 14;
  horizonDates: string[] = [];
  buckets: MonthBucket[] = [];
  dailyOverrides = new Map<string, number>();
  baselinePlan: BudgetPlanEntry[] = [];
  lastBaseline: ForecastResponse | null = null;
  lastScenario: ForecastResponse | null = null;
  history: HistoryResponse | null = null;
  scenarios: ScenarioRecord[] = [];

  /** Prefill the editor from the advertiser's last stored monthly budget. */
  initializePlan(horizonDates: string[], lastObservedBudget: number): void {
    this.horizonDates = horizonDates;
    this.baselinePlan = horizonDates.map(date => ({ date, amount: lastObservedBudget }));
    this.buckets = bucketsFromDaily(this.baselinePlan);
    this.dailyOverrides.clear();
  }

  months(): string[] {
    return horizonMonths(this.horizonDates);
  }

  setMonthBucket(month: string, amount: number): void {
    this.buckets = this.buckets.map(b => (b.month === month ? { ...b, amount } : b));
  }

  setDailyOverride(date: string, amount: number): void {
    this.dailyOverrides.set(date, amount);
  }

  /** Current editable plan: bucket expansion plus any advanced daily edits. */
  currentPlan(): BudgetPlanEntry[] {
    const expanded = expandBuckets(this.horizonDates, this.buckets);
    return expanded.map(entry =>
      this.dailyOverrides.has(entry.date)
        ? { date: entry.date, amount: this.dailyOverrides.get(entry.date)! }
        : entry);
  }

  planMatchesBaseline(): boolean {
    return plansEqual(this.currentPlan(), this.baselinePlan);
  }

  recordScenario(label: string, plan: BudgetPlanEntry[], response: ForecastResponse): void {
    this.scenarios.push({ label, plan, response });
  }

  /** Compare-table rows; every number is read off stored responses. */
  compareRows(): Array<{ label: string; meanCpc: number; totalBudget: number;
                         impliedCost: number }> {
    return this.scenarios.map(record => {
      const forecast = record.response.scenario ?? record.response;
      const meanCpc = forecast.point.reduce((a, v) => a + v, 0) / forecast.point.length;
      const totalBudget = totalPlanned(record.plan);
      return {
        label: record.label,
        meanCpc,
        totalBudget,
        impliedCost: totalBudget, // budget is spent; cost equals the plan total
      };
    });
  }

  /** Promote a compare-view row: its plan becomes the editor's starting plan. */
  promoteScenario(index: number): void {
    const record = this.scenarios[index];
    if (!record) {
      throw new Error(`no scenario at index ${index}`);
    }
    this.baselinePlan = record.plan.map(e => ({ ...e }));
    this.buckets = bucketsFromDaily(this.baselinePlan);
    this.dailyOverrides.clear();
  }
}
