"""cpcast: daily cost-per-click forecasting with competitor covariates.

Library layout:

- ``panel``     advertiser panel ingestion, cleaning, derived features
- ``simgen``    synthetic competitive-market generator with planted structure
- ``features``  14-feature summaries of daily series
- ``dtw``       dynamic time warping distances, paths, barycenters
- ``cluster``   category / feature-space / distance-based clustering
- ``autodiff``  reverse-mode differentiation kernel for the neural models
- ``models``    snaive, sarima, gbdt, lstm, tft forecasters
- ``pipeline``  feature composition, metrics, backtesting, what-if scenarios
- ``runstore``  run-directory persistence
- ``service``   HTTP API for the scenario planner
- ``cli``       command-line entry point
"""

__version__ = "0.1.0"
