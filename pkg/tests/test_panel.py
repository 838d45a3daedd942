import io

import numpy as np
import pytest

from cpcast import panel as pnl


def make_csv(rows):
    out = ["advertiser_id,date,category,adcost,adclicks,impressions"]
    out.extend(",".join(str(c) for c in r) for r in rows)
    return "\n".join(out) + "\n"


def clean_rows(aid, category, start="2020-01-01", days=100, cost=10.0, clicks=5.0,
               impressions=100.0, skip_days=()):
    dates = np.arange(np.datetime64(start), np.datetime64(start) + np.timedelta64(days, "D"))
    return [(aid, str(d), category, cost, clicks, impressions)
            for i, d in enumerate(dates) if i not in skip_days]


def test_ingest_three_ids_hundred_days():
    rows = (clean_rows("a1", "catA") + clean_rows("a2", "catA") + clean_rows("a3", "catB"))
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    assert len(panel.advertisers) == 3
    assert all(len(s.dates) == 100 for s in panel.advertisers.values())
    assert panel.categories == ("catA", "catB")


def test_ingest_invalid_calendar_date():
    rows = clean_rows("a1", "catA", days=3)
    rows[1] = ("a1", "2020-13-01", "catA", 10.0, 5.0, 100.0)
    with pytest.raises(pnl.ParseError, match="row 3"):
        pnl.ingest_csv(io.StringIO(make_csv(rows)))


def test_ingest_is_deterministic():
    text = make_csv(clean_rows("a1", "catA") + clean_rows("a2", "catB"))
    p1 = pnl.ingest_csv(io.StringIO(text))
    p2 = pnl.ingest_csv(io.StringIO(text))
    assert p1.ids() == p2.ids()
    for aid in p1.ids():
        for name in ("adcost", "adclicks", "impressions"):
            assert np.array_equal(getattr(p1[aid], name), getattr(p2[aid], name))
        assert np.array_equal(p1[aid].dates, p2[aid].dates)


def test_ingest_duplicate_id_date_rejected():
    rows = clean_rows("a1", "catA", days=3)
    rows.append(rows[0])
    with pytest.raises(pnl.ParseError, match=r"a1, 2020-01-01"):
        pnl.ingest_csv(io.StringIO(make_csv(rows)))


def test_ingest_inserts_missing_days_as_nan():
    rows = clean_rows("a1", "catA", days=10) + clean_rows("a2", "catA", days=10, skip_days=(4,))
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    assert np.isnan(panel["a2"].adcost[4])
    assert panel["a2"].missing_fraction() == pytest.approx(0.1)


def test_csv_round_trip():
    rows = clean_rows("a1", "catA", days=12) + clean_rows("a2", "catB", days=12, skip_days=(3,))
    p1 = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    buf = io.StringIO()
    pnl.write_csv(p1, buf)
    p2 = pnl.ingest_csv(io.StringIO(buf.getvalue()))
    for aid in p1.ids():
        assert np.array_equal(p1[aid].adcost, p2[aid].adcost, equal_nan=True)


def test_filter_missing_four_percent_removed():
    rows = (clean_rows("bad", "catA", days=100, skip_days=(10, 20, 30, 40))
            + clean_rows("good", "catA", days=100))
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    kept = pnl.filter_missing(panel, max_missing_frac=0.01)
    assert kept.ids() == ["good"]


def test_filter_missing_tenth_percent_retained():
    rows = clean_rows("a1", "catA", days=1000, skip_days=(500,))
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    kept = pnl.filter_missing(panel, max_missing_frac=0.01)
    assert kept.ids() == ["a1"]


def test_filter_missing_zero_threshold_boundary():
    rows = clean_rows("gap", "catA", days=50, skip_days=(7,)) + clean_rows("full", "catA", days=50)
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    kept = pnl.filter_missing(panel, max_missing_frac=0.0)
    assert kept.ids() == ["full"]


def test_filter_missing_no_survivors_is_an_error():
    rows = clean_rows("a1", "catA", days=50, skip_days=(1, 2, 3))
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    with pytest.raises(ValueError, match="no advertisers survive"):
        pnl.filter_missing(panel, max_missing_frac=0.01)


def test_filter_missing_idempotent():
    rows = (clean_rows("a1", "catA", days=100, skip_days=(5,))
            + clean_rows("a2", "catA", days=100))
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    once = pnl.filter_missing(panel, max_missing_frac=0.02)
    twice = pnl.filter_missing(once, max_missing_frac=0.02)
    assert once.ids() == twice.ids()


def _series(values, aid="a1", category="c"):
    n = len(values)
    dates = np.arange(np.datetime64("2020-01-01"), np.datetime64("2020-01-01") + np.timedelta64(n, "D"))
    arr = np.asarray(values, dtype=np.float64)
    return pnl.AdvertiserSeries(advertiser_id=aid, category=category, dates=dates,
                                adcost=arr.copy(), adclicks=arr.copy(), impressions=arr.copy())


def test_interpolate_midpoint():
    s = _series([2.0, np.nan, 4.0])
    out = pnl.interpolate_linear(s)
    assert np.allclose(out.adcost, [2.0, 3.0, 4.0])


def test_interpolate_identity_without_missing():
    s = _series([1.0, 5.0, 2.0])
    out = pnl.interpolate_linear(s)
    assert np.array_equal(out.adcost, s.adcost)


def test_interpolate_two_interior_points():
    s = _series([1.0, np.nan, np.nan, 4.0])
    out = pnl.interpolate_linear(s)
    # line through (0,1) and (3,4) evaluated at 1 and 2
    expected = 1.0 + (4.0 - 1.0) / 3.0 * np.arange(4)
    assert np.allclose(out.adcost, expected)


def test_interpolate_extends_boundaries_with_nearest():
    s = _series([np.nan, 3.0, np.nan, 5.0, np.nan])
    out = pnl.interpolate_linear(s)
    assert np.allclose(out.adcost, [3.0, 3.0, 4.0, 5.0, 5.0])


def test_interpolate_preserves_observed_values():
    rng = np.random.default_rng(3)
    for _ in range(5):
        values = rng.uniform(1, 10, size=60)
        mask = rng.random(60) < 0.2
        holed = values.copy()
        holed[mask] = np.nan
        out = pnl.interpolate_linear(_series(holed))
        assert np.array_equal(out.adcost[~mask], values[~mask])


def test_interpolate_fully_missing_channel_errors():
    s = _series([np.nan, np.nan, np.nan])
    with pytest.raises(ValueError, match="adcost"):
        pnl.interpolate_linear(s)


def test_derive_cpc_ratio():
    s = _series([1.0] * 10)
    s.adcost[:] = 10.0
    s.adclicks[:] = 5.0
    out = pnl.derive_cpc(s)
    assert np.allclose(out.cpc, 2.0)


def test_derive_cpc_zero_click_day_interpolated():
    s = _series([1.0] * 3)
    s.adcost[:] = [2.0, 7.0, 4.0]
    s.adclicks[:] = [1.0, 0.0, 1.0]
    out = pnl.derive_cpc(s)
    assert np.allclose(out.cpc, [2.0, 3.0, 4.0])


def test_derive_cpc_all_zero_clicks_errors():
    s = _series([1.0] * 5)
    s.adclicks[:] = 0.0
    with pytest.raises(ValueError, match="zero clicks"):
        pnl.derive_cpc(s)


def test_lag7_matches_shifted_cpc():
    rng = np.random.default_rng(11)
    s = _series(rng.uniform(1, 5, size=40))
    s.adclicks[:] = 1.0
    out = pnl.derive_cpc(s)
    assert np.array_equal(out.lag7_cpc[7:], out.cpc[:-7])


def test_cpc_times_clicks_recovers_cost():
    rng = np.random.default_rng(5)
    s = _series(rng.uniform(1, 5, size=30))
    s.adcost[:] = rng.uniform(10, 50, size=30)
    s.adclicks[:] = rng.integers(1, 20, size=30).astype(float)
    out = pnl.derive_cpc(s)
    assert np.allclose(out.cpc * s.adclicks, s.adcost)


def test_extract_budget_constant_month():
    dates = np.arange(np.datetime64("2020-04-01"), np.datetime64("2020-05-01"))
    s = pnl.AdvertiserSeries("a1", "c", dates, np.full(30, 10.0), np.ones(30), np.ones(30))
    out = pnl.extract_budget(s)
    assert np.allclose(out.adbudget, 300.0)


def test_extract_budget_step_at_month_boundary():
    dates = np.arange(np.datetime64("2020-04-01"), np.datetime64("2020-06-01"))
    cost = np.concatenate([np.full(30, 10.0), np.full(31, 20.0)])
    s = pnl.AdvertiserSeries("a1", "c", dates, cost, np.ones(61), np.ones(61))
    out = pnl.extract_budget(s)
    assert np.allclose(out.adbudget[:30], 300.0)
    assert np.allclose(out.adbudget[30:], 620.0)


def test_budget_constant_within_each_month():
    rng = np.random.default_rng(9)
    dates = np.arange(np.datetime64("2020-01-15"), np.datetime64("2020-04-20"))
    n = len(dates)
    s = pnl.AdvertiserSeries("a1", "c", dates, rng.uniform(1, 9, n), np.ones(n), np.ones(n))
    out = pnl.extract_budget(s)
    for m in np.unique(dates.astype("datetime64[M]")):
        vals = out.adbudget[dates.astype("datetime64[M]") == m]
        assert np.all(vals == vals[0])


def test_calendar_dow_cycles_and_doy_resets():
    dates = np.arange(np.datetime64("2019-12-25"), np.datetime64("2020-01-10"))
    cal = pnl.CalendarFrame.from_dates(dates)
    assert np.array_equal(cal.dow[1:], (cal.dow[:-1] + 1) % 7)
    jan1 = int(np.where(dates == np.datetime64("2020-01-01"))[0][0])
    assert cal.doy[jan1] == 1
    assert cal.doy[jan1 - 1] == 365
    assert cal.month[jan1] == 1 and cal.month[jan1 - 1] == 12
    # 2020-01-01 was a Wednesday; Monday = 0
    assert cal.dow[jan1] == 2


def test_clean_panel_end_to_end():
    rows = (clean_rows("a1", "catA", days=100, skip_days=(31,))
            + clean_rows("a2", "catB", days=100))
    panel = pnl.ingest_csv(io.StringIO(make_csv(rows)))
    out = pnl.clean_panel(panel, max_missing_frac=0.05)
    for s in out.advertisers.values():
        assert not np.isnan(s.cpc).any()
        assert (s.cpc >= 0).all()
        assert s.adbudget is not None and s.lag7_cpc is not None
