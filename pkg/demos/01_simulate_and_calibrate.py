"""
Simulating a competitive ad market
==================================

Generate a synthetic panel of advertisers with planted cluster structure,
check that its click/budget correlations sit near the real-world values
the generator is calibrated to, and plot a few CPC trajectories.
"""

import numpy as np

from cpcast.simgen import MarketConfig, simulate, validate_calibration

# one seed drives everything: re-running gives a bit-identical panel
config = MarketConfig(n_advertisers=20, n_clusters=4, n_days=1100, seed=7)
panel, truth = simulate(config)

print(f"panel: {len(panel.advertisers)} advertisers x {panel.n_days} days")
print(f"planted clusters: {sorted(set(truth.cluster_of.values()))}")

report = validate_calibration(panel)
print(f"corr(daily clicks, monthly budget)      = {report.corr_clicks_budget:.3f}")
print(f"corr(daily impressions, monthly budget) = {report.corr_impressions_budget:.3f}")
print(f"weekly seasonality strength: mean {report.weekly_strength_mean:.2f} "
      f"(q10 {report.weekly_strength_q10:.2f}, q90 {report.weekly_strength_q90:.2f})")

# plot one advertiser per cluster
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

fig, ax = plt.subplots(figsize=(10, 4))
seen = set()
for aid, cluster in truth.cluster_of.items():
    if cluster in seen:
        continue
    seen.add(cluster)
    ax.plot(panel[aid].dates, panel[aid].cpc, lw=0.8, label=f"cluster {cluster} ({aid})")
ax.set_ylabel("CPC")
ax.legend()
fig.tight_layout()
fig.savefig("demo_01_cpc_trajectories.png", dpi=120)
print("wrote demo_01_cpc_trajectories.png")
