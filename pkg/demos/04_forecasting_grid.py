"""
Backtesting the model grid
==========================

Compose univariate and competitor-aware inputs for every advertiser,
train the forecaster families at one origin, and score them with MAE and
SMAPE exactly as the report CSVs do. Small panel and tiny model budgets
keep this demo quick; accuracy numbers are illustrative only.
"""

from cpcast import pipeline
from cpcast.cluster import ClusterAssignment
from cpcast.simgen import MarketConfig, simulate

panel, truth = simulate(MarketConfig(n_advertisers=6, n_clusters=2, n_days=300, seed=11))
clusters = {"distance": ClusterAssignment("distance", 2, dict(truth.cluster_of))}

grid = [("snaive", "univar"), ("sarima", "univar"),
        ("gbdt", "multivar"), ("tft", "multivar.comp.dist")]
fast = {"sarima": {"sarima": (1, 0, 0, 0, 1, 1)},
        "gbdt": {"gbdt": {"rounds": 10, "depth": 2, "lr": 0.2, "reg_lambda": 1.0,
                          "gamma": 0.0, "min_child": 2.0, "lags": (1, 7)}},
        "tft": {"hidden": 8, "heads": 2, "epochs": 10, "max_windows": 6}}

report = pipeline.backtest(panel, grid, clusters=clusters, horizons=(14,),
                           encoder=28, origin=panel.dates[-14],
                           config_overrides=fast)

print(f"origin {report.origin}; {report.elapsed_seconds:.1f}s")
print(f"{'config':28s} {'MAE':>8s} {'SMAPE':>8s}")
for row in report.summary_rows():
    print(f"{row['config']:28s} {row['mae_mean']:8.3f} {row['smape_mean']:8.3f}")
