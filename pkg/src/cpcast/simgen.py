"""Deterministic synthetic competitive-market generator.

Panels are built from planted structure: per-cluster latent AR(1) levels
carrying weekly sinusoids and special-day spikes, per-advertiser bases,
monthly piecewise-constant budgets with occasional regime changes, a known
click <- budget link, and an optional pandemic-style shock that multiplies
budgets and CPC for the affected categories from a given date onward.

Every draw flows from one 64-bit seed through named per-advertiser and
per-cluster substreams, so panels are bit-identical across runs and safe
to regenerate in parallel.

Default parameters are calibrated so the pooled Pearson correlation of
daily clicks (and impressions) with the monthly budget lands near 0.7.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import extract_features
from .panel import AdvertiserSeries, CalendarFrame, PanelDataset, clean_panel


@dataclass
class ShockConfig:
    """Market-wide break applied to the affected categories from a date on."""

    date: str
    affected_categories: tuple[str, ...] = ()
    budget_multiplier: float = 0.5
    cpc_multiplier: float = 0.6
    budget_recovery_months: int = 5  # linear fade of the budget cut back to 1.0; 0 = permanent


@dataclass
class MarketConfig:
    n_advertisers: int = 20
    n_clusters: int = 4
    n_days: int = 1100
    start_date: str = "2019-01-01"
    seed: int = 0
    budget_elasticity: float = -0.15
    weekly_amp_range: tuple[float, float] = (0.05, 0.25)
    special_days: tuple[tuple[int, float], ...] = ((358, 1.5), (359, 1.5))
    shock: ShockConfig | None = None
    noise_scale: float = 1.0
    # market texture knobs; spans are log-uniform half-widths (bounded tails
    # keep the pooled click/budget correlation stable on small panels)
    click_exponent: float = 0.85
    n_categories: int | None = None       # defaults to n_clusters
    category_match_prob: float = 0.75     # chance an advertiser keeps its cluster's home category
    budget_change_prob: float = 0.25      # monthly regime-change probability
    budget_regime_sigma: float = 0.35     # regime-change magnitude (lognormal)
    budget_ramp_months: int = 0           # 0 = step changes; n = geometric approach over ~n months
    budget_step_prob: float = 0.0         # chance a regime change jumps instead of ramping
    budget_span: float = 1.0              # cross-advertiser budget spread
    cpc_span: float = 0.9                 # cross-advertiser base-CPC spread
    level_rho: float = 0.985              # AR(1) coefficient of the cluster log-level
    level_sigma: float = 0.04             # AR(1) innovation scale
    click_level_exponent: float = 1.0     # costlier markets buy fewer clicks per euro
    cpc_budget_lag_days: int = 0          # days before budget moves reach the price

    def validate(self) -> None:
        problems = []
        if self.n_clusters > self.n_advertisers:
            problems.append("n_clusters exceeds n_advertisers")
        if self.n_days < 120:
            problems.append("n_days must be at least 120")
        if self.noise_scale < 0:
            problems.append("noise_scale must be nonnegative")
        if not (0 < self.weekly_amp_range[0] <= self.weekly_amp_range[1] < 1) \
                and self.weekly_amp_range != (0.0, 0.0):
            problems.append("weekly_amp_range must be within (0, 1) or (0, 0)")
        for doy, mult in self.special_days:
            if not (1 <= doy <= 366) or mult <= 0:
                problems.append(f"special day ({doy}, {mult}) invalid")
        if self.shock is not None:
            if self.shock.budget_multiplier <= 0 or self.shock.cpc_multiplier <= 0:
                problems.append("shock multipliers must be positive")
        if problems:
            raise ValueError("invalid MarketConfig: " + "; ".join(problems))


@dataclass
class GroundTruth:
    cluster_of: dict[str, int]
    shock_date: str | None
    elasticity_sign: dict[str, int]
    affected_categories: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps({"cluster_of": self.cluster_of, "shock_date": self.shock_date,
                           "elasticity_sign": self.elasticity_sign,
                           "affected_categories": list(self.affected_categories)}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        raw = json.loads(text)
        return cls(cluster_of={k: int(v) for k, v in raw["cluster_of"].items()},
                   shock_date=raw.get("shock_date"),
                   elasticity_sign={k: int(v) for k, v in raw["elasticity_sign"].items()},
                   affected_categories=tuple(raw.get("affected_categories", ())))


@dataclass
class CalibrationReport:
    corr_clicks_budget: float | None
    corr_impressions_budget: float | None
    weekly_strength_mean: float
    weekly_strength_q10: float
    weekly_strength_q90: float
    flags: tuple[str, ...] = ()


def _pooled_corr(a: np.ndarray, b: np.ndarray) -> float | None:
    if a.std() == 0 or b.std() == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def simulate(config: MarketConfig) -> tuple[PanelDataset, GroundTruth]:
    """Generate a cleaned panel plus its planted ground truth."""
    config.validate()
    n, k, days = config.n_advertisers, config.n_clusters, config.n_days
    dates = np.arange(np.datetime64(config.start_date),
                      np.datetime64(config.start_date) + np.timedelta64(days, "D"))
    cal = CalendarFrame.from_dates(dates)
    months = dates.astype("datetime64[M]")
    unique_months = np.unique(months)
    month_index = {m: i for i, m in enumerate(unique_months)}
    day_month = np.array([month_index[m] for m in months])
    t = np.arange(days)

    n_categories = config.n_categories or k
    categories = [f"cat{c:02d}" for c in range(n_categories)]

    # cluster-level latent log-levels and weekly phases
    cluster_level = np.empty((k, days))
    cluster_phase = np.empty(k)
    for c in range(k):
        rng = np.random.default_rng([config.seed, 1, c])
        innovations = rng.normal(scale=config.level_sigma, size=days)
        log_level = np.empty(days)
        log_level[0] = innovations[0]
        for i in range(1, days):
            log_level[i] = config.level_rho * log_level[i - 1] + innovations[i]
        cluster_level[c] = np.exp(log_level)
        cluster_phase[c] = rng.uniform(0, 2 * np.pi)

    # special-day and shock masks
    spike = np.ones(days)
    for doy, mult in config.special_days:
        spike[cal.doy == doy] *= mult

    shock_from = None
    if config.shock is not None:
        shock_date = np.datetime64(config.shock.date, "D")
        if dates[0] <= shock_date <= dates[-1]:
            shock_from = shock_date
    affected = set(config.shock.affected_categories) if config.shock else set()
    if config.shock is not None and not affected:
        affected = {categories[0]}

    advertisers: dict[str, AdvertiserSeries] = {}
    cluster_of: dict[str, int] = {}
    for i in range(n):
        rng = np.random.default_rng([config.seed, 2, i])
        aid = f"adv{i:03d}"
        cluster = i % k
        cluster_of[aid] = cluster
        home = cluster % n_categories
        if rng.random() < config.category_match_prob or n_categories == 1:
            category = categories[home]
        else:
            others = [c for c in range(n_categories) if c != home]
            category = categories[others[rng.integers(len(others))]]

        base_cpc = float(np.exp(rng.uniform(-config.cpc_span, config.cpc_span)))
        base_budget = float(3000.0 * np.exp(rng.uniform(-config.budget_span, config.budget_span)))
        weekly_amp = float(rng.uniform(*config.weekly_amp_range))
        ctr = float(rng.uniform(0.04, 0.06))

        # monthly budget path: regimes re-drawn around the base level, so
        # dispersion stays bounded instead of compounding into a random walk;
        # with a ramp, the level approaches each new target geometrically so
        # budget moves are telegraphed months ahead
        budget_by_month = np.empty(len(unique_months))
        target = 1.0
        regime = 1.0
        alpha = 1.0 if config.budget_ramp_months <= 0 else 1.0 / config.budget_ramp_months
        half_width = config.budget_regime_sigma * np.sqrt(3.0)
        for m in range(len(unique_months)):
            step = alpha
            if m > 0 and rng.random() < config.budget_change_prob:
                # bounded log-uniform target with the sigma^2 log-variance of
                # a lognormal draw; unbounded tails would park forecast-time
                # budgets outside every training window
                target = float(np.exp(rng.uniform(-half_width, half_width)))
                if rng.random() < config.budget_step_prob:
                    regime = target
            regime = regime + (target - regime) * step
            budget_by_month[m] = base_budget * regime

        # shock: cut budgets from the shock month on, fading back linearly
        cpc_shock = np.ones(days)
        if shock_from is not None and category in affected:
            shock_month = month_index[shock_from.astype("datetime64[M]")]
            for m in range(shock_month, len(unique_months)):
                since = m - shock_month
                bm = config.shock.budget_multiplier
                if config.shock.budget_recovery_months > 0:
                    frac = min(1.0, since / config.shock.budget_recovery_months)
                    budget_by_month[m] *= bm + (1.0 - bm) * frac
                else:
                    budget_by_month[m] *= bm
            cpc_shock[dates >= shock_from] = config.shock.cpc_multiplier

        monthly_budget = budget_by_month[day_month]
        budget_ratio = monthly_budget / base_budget
        # the market price answers budget moves with a delay; click volume
        # responds immediately
        lag = config.cpc_budget_lag_days
        cpc_ratio = budget_ratio if lag <= 0 else np.r_[
            np.full(lag, budget_ratio[0]), budget_ratio[:-lag]]

        weekly = 1.0 + weekly_amp * np.sin(2 * np.pi * t / 7.0 + cluster_phase[cluster])
        cpc_noise = rng.lognormal(mean=0.0, sigma=0.10 * config.noise_scale, size=days)
        click_noise = rng.lognormal(mean=0.0, sigma=0.30 * config.noise_scale, size=days)
        impression_noise = rng.lognormal(mean=0.0, sigma=0.05 * config.noise_scale, size=days)

        cpc = (base_cpc * cluster_level[cluster] * weekly * spike * cpc_shock
               * cpc_ratio ** config.budget_elasticity * cpc_noise)
        # a costlier market level buys fewer clicks for the same budget, so
        # clicks carry an independent (inverse) view of the latent level
        clicks_raw = ((base_budget / 30.0)
                      / (base_cpc * cluster_level[cluster] ** config.click_level_exponent)
                      * budget_ratio ** config.click_exponent * weekly * click_noise)
        clicks = np.maximum(np.round(clicks_raw), 1.0)
        cost = cpc * clicks
        impressions = np.maximum(np.round(clicks / ctr * impression_noise), clicks)

        advertisers[aid] = AdvertiserSeries(
            advertiser_id=aid, category=category, dates=dates,
            adcost=cost, adclicks=clicks, impressions=impressions)

    panel = clean_panel(PanelDataset(advertisers=advertisers), max_missing_frac=1.0)
    truth = GroundTruth(
        cluster_of=cluster_of,
        shock_date=str(shock_from) if shock_from is not None else None,
        elasticity_sign={aid: int(np.sign(config.budget_elasticity)) for aid in cluster_of},
        affected_categories=tuple(sorted(affected)) if shock_from is not None else ())
    return panel, truth


def validate_calibration(panel: PanelDataset) -> CalibrationReport:
    """Pooled click/impression-versus-budget correlations plus weekly strengths."""
    if len(panel.advertisers) < 2:
        raise ValueError("need at least 2 advertisers to calibrate")
    clicks = np.concatenate([s.adclicks for s in panel.advertisers.values()])
    imps = np.concatenate([s.impressions for s in panel.advertisers.values()])
    budget = np.concatenate([s.adbudget for s in panel.advertisers.values()])
    corr_cb = _pooled_corr(clicks, budget)
    corr_ib = _pooled_corr(imps, budget)
    strengths = np.array([extract_features(s.cpc).season for s in panel.advertisers.values()])
    flags = []
    if corr_cb is None:
        flags.append("corr(clicks, budget) undefined: constant channel")
    if corr_ib is None:
        flags.append("corr(impressions, budget) undefined: constant channel")
    return CalibrationReport(
        corr_clicks_budget=corr_cb,
        corr_impressions_budget=corr_ib,
        weekly_strength_mean=float(strengths.mean()),
        weekly_strength_q10=float(np.quantile(strengths, 0.1)),
        weekly_strength_q90=float(np.quantile(strengths, 0.9)),
        flags=tuple(flags))


def inject_shock_window_labels(config: MarketConfig, offsets_months: tuple[int, int, int] = (-6, 2, 6),
                               window_months: int = 2):
    """Three non-overlapping month-aligned evaluation windows around the shock.

    Each window starts at the shock month shifted by its offset and spans
    ``window_months`` full calendar months; returns ((start, end), ...) for
    the pre, early-post, and late-post windows as datetime64 day pairs.
    """
    if config.shock is None:
        raise ValueError("no shock configured")
    shock_month = np.datetime64(config.shock.date, "M")
    windows = []
    for off in offsets_months:
        start_month = shock_month + np.timedelta64(off, "M")
        end_month = start_month + np.timedelta64(window_months, "M")
        start = start_month.astype("datetime64[D]")
        end = end_month.astype("datetime64[D]") - np.timedelta64(1, "D")
        windows.append((start, end))
    for (s1, e1), (s2, _) in zip(windows, windows[1:]):
        if s2 <= e1:
            raise ValueError("shock windows overlap; adjust offsets")
    return tuple(windows)
