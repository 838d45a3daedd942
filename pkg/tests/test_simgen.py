import numpy as np
import pytest

from cpcast import simgen
from cpcast.cluster import smooth
from cpcast.panel import AdvertiserSeries, CalendarFrame, PanelDataset


def test_shape_and_label_range():
    panel, truth = simgen.simulate(simgen.MarketConfig(
        n_advertisers=20, n_clusters=4, n_days=1100, seed=7))
    assert len(panel.advertisers) == 20
    assert all(len(s.cpc) == 1100 for s in panel.advertisers.values())
    assert set(truth.cluster_of.values()) == set(range(4))


def test_seeded_determinism_bit_identical():
    cfg = simgen.MarketConfig(seed=42, n_advertisers=8, n_days=400)
    p1, t1 = simgen.simulate(cfg)
    p2, t2 = simgen.simulate(cfg)
    for aid in p1.ids():
        for ch in ("adcost", "adclicks", "impressions", "cpc", "adbudget"):
            assert np.array_equal(getattr(p1[aid], ch), getattr(p2[aid], ch))
    assert t1.cluster_of == t2.cluster_of


def test_default_calibration_correlations():
    cbs, ibs = [], []
    for seed in range(5):
        panel, _ = simgen.simulate(simgen.MarketConfig(seed=seed))
        rep = simgen.validate_calibration(panel)
        cbs.append(rep.corr_clicks_budget)
        ibs.append(rep.corr_impressions_budget)
    assert 0.6 <= np.median(cbs) <= 0.8, cbs
    assert 0.6 <= np.median(ibs) <= 0.8, ibs


def test_noise_free_linear_link_is_near_perfect():
    cfg = simgen.MarketConfig(seed=1, noise_scale=0.0, click_exponent=1.0,
                              weekly_amp_range=(0.0, 0.0), cpc_span=0.0,
                              budget_elasticity=0.0, level_sigma=0.0,
                              special_days=())
    panel, _ = simgen.simulate(cfg)
    rep = simgen.validate_calibration(panel)
    assert rep.corr_clicks_budget >= 0.99


def test_constant_budget_flagged_undefined():
    dates = np.arange(np.datetime64("2020-04-01"), np.datetime64("2020-05-01"))
    n = len(dates)
    advertisers = {}
    for aid in ("a1", "a2"):
        s = AdvertiserSeries(aid, "c", dates, np.full(n, 10.0), np.full(n, 5.0),
                             np.full(n, 100.0))
        advertisers[aid] = s
    from cpcast.panel import clean_panel
    panel = clean_panel(PanelDataset(advertisers=advertisers), max_missing_frac=1.0)
    rep = simgen.validate_calibration(panel)
    assert rep.corr_clicks_budget is None
    assert any("undefined" in f for f in rep.flags)


def test_generated_cost_is_cpc_times_clicks():
    panel, _ = simgen.simulate(simgen.MarketConfig(seed=3, n_advertisers=6, n_days=200))
    for s in panel.advertisers.values():
        assert np.allclose(s.cpc * s.adclicks, s.adcost, rtol=1e-12)


def test_budgets_monthly_piecewise_constant():
    panel, _ = simgen.simulate(simgen.MarketConfig(seed=5, n_advertisers=4, n_days=200))
    for s in panel.advertisers.values():
        months = s.dates.astype("datetime64[M]")
        for m in np.unique(months):
            vals = s.adbudget[months == m]
            assert np.all(vals == vals[0])


def test_shock_drops_cpc_of_affected_categories():
    shock = simgen.ShockConfig(date="2020-03-15", cpc_multiplier=0.6)
    for seed in range(3):
        panel, truth = simgen.simulate(simgen.MarketConfig(seed=seed, shock=shock))
        sd = np.datetime64(truth.shock_date)
        affected = [s for s in panel.advertisers.values() if s.category == "cat00"]
        assert affected
        for s in affected:
            pre = s.cpc[(s.dates >= sd - np.timedelta64(60, "D")) & (s.dates < sd)].mean()
            post = s.cpc[(s.dates >= sd) & (s.dates < sd + np.timedelta64(60, "D"))].mean()
            assert post <= 0.8 * pre


def test_within_cluster_correlation_exceeds_across():
    gaps = []
    for seed in range(5):
        panel, truth = simgen.simulate(simgen.MarketConfig(seed=seed, n_advertisers=12,
                                                           n_clusters=3, n_days=400))
        ids = panel.ids()
        X = np.stack([smooth(panel[a].cpc) for a in ids])
        X = (X - X.mean(axis=1, keepdims=True)) / X.std(axis=1, keepdims=True)
        corr = np.corrcoef(X)
        within, across = [], []
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                bucket = within if truth.cluster_of[ids[i]] == truth.cluster_of[ids[j]] else across
                bucket.append(corr[i, j])
        gaps.append(np.mean(within) - np.mean(across))
    assert np.median(gaps) > 0.1, gaps


def test_shock_windows_match_reference_layout():
    cfg = simgen.MarketConfig(shock=simgen.ShockConfig(date="2020-03-15"))
    (pre, post1, post2) = simgen.inject_shock_window_labels(cfg)
    assert pre == (np.datetime64("2019-09-01"), np.datetime64("2019-10-31"))
    assert post1 == (np.datetime64("2020-05-01"), np.datetime64("2020-06-30"))
    assert post2 == (np.datetime64("2020-09-01"), np.datetime64("2020-10-31"))


def test_shock_windows_require_shock():
    with pytest.raises(ValueError, match="no shock"):
        simgen.inject_shock_window_labels(simgen.MarketConfig())


def test_shock_windows_never_overlap():
    cfg = simgen.MarketConfig(shock=simgen.ShockConfig(date="2021-07-04"))
    windows = simgen.inject_shock_window_labels(cfg)
    for (_, e1), (s2, _) in zip(windows, windows[1:]):
        assert s2 > e1


def test_invalid_config_lists_fields():
    with pytest.raises(ValueError, match="n_clusters"):
        simgen.MarketConfig(n_advertisers=3, n_clusters=5).validate()
    with pytest.raises(ValueError, match="n_days"):
        simgen.MarketConfig(n_days=60).validate()


def test_ground_truth_json_round_trip():
    _, truth = simgen.simulate(simgen.MarketConfig(seed=2, n_advertisers=5, n_days=150))
    again = simgen.GroundTruth.from_json(truth.to_json())
    assert again.cluster_of == truth.cluster_of
    assert again.elasticity_sign == truth.elasticity_sign
    assert again.shock_date == truth.shock_date
