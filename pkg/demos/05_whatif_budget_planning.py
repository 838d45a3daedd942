"""
What-if budget planning
=======================

Train a competitor-aware forecaster whose market has a known negative
budget elasticity, then ask: what happens to CPC if the advertiser
doubles (or halves) next month's budget?
"""

import numpy as np

from cpcast import pipeline
from cpcast.models import fit
from cpcast.simgen import MarketConfig, simulate

# click_exponent + budget_elasticity stays positive so realized monthly
# cost (the budget channel models actually see) tracks the planted budget
panel, truth = simulate(MarketConfig(
    n_advertisers=6, n_clusters=2, n_days=430, seed=2,
    budget_elasticity=-0.5, click_exponent=1.1, budget_change_prob=0.4,
    budget_regime_sigma=0.7, budget_ramp_months=4, budget_step_prob=0.4,
    level_rho=0.9, level_sigma=0.02, noise_scale=0.5))
aid = panel.ids()[0]
print(f"advertiser {aid}; planted elasticity sign: {truth.elasticity_sign[aid]}")

model_input = pipeline.compose(panel, aid, pipeline.CompositionKind("multivar"),
                               origin=panel.dates[-14], horizon=14)
config = pipeline.make_config("tft", 14, 60, 0,
                              {"hidden": 16, "heads": 2, "epochs": 60,
                               "patience": 10, "lr": 3e-3, "max_windows": 20,
                               "window_stride": 4})
model = fit(model_input, config)

stored_plan = model_input.known_future[model_input.n_days:, 0]
for label, factor in (("double", 2.0), ("halve", 0.5)):
    outcome = pipeline.whatif(model, model_input, stored_plan * factor)
    print(f"{label} the budget plan: mean CPC delta = {outcome['delta'].mean():+.4f}")
print("(negative elasticity: more budget should push CPC down)")
