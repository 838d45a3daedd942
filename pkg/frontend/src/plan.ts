/**
 * Budget plan editing model.
 *
 * Budgets are monthly in the underlying market, so the editor works in
 * monthly buckets that expand to constant daily values within each month;
 * an advanced mode allows direct daily edits on top of the expansion.
 */

import type { BudgetPlanEntry } from './types.js';

export interface MonthBucket {
  month: string; // YYYY-MM
  amount: number;
}

function monthOf(date: string): string {
  return date.slice(0, 7);
}

/** Group horizon dates by calendar month, preserving order. */
export function horizonMonths(dates: string[]): string[] {
  const months: string[] = [];
  for (const d of dates) {
    const m = monthOf(d);
    if (months[months.length - 1] !== m) {
      months.push(m);
    }
  }
  return months;
}

/** Seed monthly buckets from a daily plan (bucket amount = that month's daily value). */
export function bucketsFromDaily(plan: BudgetPlanEntry[]): MonthBucket[] {
  const buckets: MonthBucket[] = [];
  for (const entry of plan) {
    const m = monthOf(entry.date);
    const last = buckets[buckets.length - 1];
    if (!last || last.month !== m) {
      buckets.push({ month: m, amount: entry.amount });
    }
  }
  return buckets;
}

/** Expand monthly buckets to constant daily values across the horizon dates. */
export function expandBuckets(dates: string[], buckets: MonthBucket[]): BudgetPlanEntry[] {
  const byMonth = new Map(buckets.map(b => [b.month, b.amount]));
  return dates.map(date => {
    const amount = byMonth.get(monthOf(date));
    if (amount === undefined) {
      throw new Error(`no bucket for month of ${date}`);
    }
    return { date, amount };
  });
}

/** Default plan: the last observed monthly budget carried forward. */
export function defaultPlan(dates: string[], lastObservedBudget: number): BudgetPlanEntry[] {
  return dates.map(date => ({ date, amount: lastObservedBudget }));
}

export function setBucket(buckets: MonthBucket[], month: string, amount: number): MonthBucket[] {
  return buckets.map(b => (b.month === month ? { ...b, amount } : b));
}

export function plansEqual(a: BudgetPlanEntry[], b: BudgetPlanEntry[]): boolean {
  return a.length === b.length &&
    a.every((e, i) => e.date === b[i].date && e.amount === b[i].amount);
}

export function totalPlanned(plan: BudgetPlanEntry[]): number {
  return plan.reduce((acc, e) => acc + e.amount, 0);
}
