"""Shared model-layer types: configs, inputs, results, checkpoints, losses.

A ModelInput carries raw (unstandardized) channel matrices plus the
normalization statistics computed on the training window; models apply and
invert the standardization themselves so a reloaded checkpoint reproduces
predictions bit-exactly from its stored stats.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

MODEL_KINDS = ("snaive", "sarima", "gbdt", "lstm", "tft")
DEFAULT_QUANTILES = (0.1, 0.5, 0.9)
TARGET_CHANNEL = "cpc"


@dataclass
class GbdtParams:
    rounds: int = 40
    depth: int = 3
    lr: float = 0.15
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child: float = 2.0
    lags: tuple[int, ...] = (1, 2, 3, 7, 14)


@dataclass
class ModelConfig:
    kind: str = "tft"
    horizon: int = 14
    encoder: int = 90
    hidden: int = 32
    heads: int = 4
    quantiles: tuple[float, ...] = DEFAULT_QUANTILES
    lr: float = 1e-3
    epochs: int = 200
    patience: int = 10
    seed: int = 0
    loss: str = "pinball"  # or "mse"
    clip_norm: float = 5.0  # global gradient-norm ceiling; 0 disables
    window_stride: int = 7
    max_windows: int = 16
    gbdt: GbdtParams = field(default_factory=GbdtParams)
    sarima: str | tuple = "auto"  # "auto" or (p, d, q, P, D, Q)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.encoder < self.horizon:
            raise ValueError(f"encoder length {self.encoder} must cover horizon {self.horizon}")
        q = tuple(self.quantiles)
        if not all(0 < a < 1 for a in q) or any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError(f"quantiles must be strictly increasing within (0, 1): {q}")
        if isinstance(self.gbdt, dict):
            self.gbdt = GbdtParams(**self.gbdt)
        if isinstance(self.sarima, list):
            self.sarima = tuple(self.sarima)

    @property
    def median_index(self) -> int:
        q = np.asarray(self.quantiles)
        return int(np.argmin(np.abs(q - 0.5)))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ModelInput:
    """Raw channel bundle for one advertiser over one window.

    ``past_observed`` is T x V_past with the forecast target in column 0;
    ``known_future`` is (T+H) x V_known and extends across the horizon.
    Normalization stats were computed on the window itself (the training
    portion) and ride along for the model to apply.
    """

    past_observed: np.ndarray
    known_future: np.ndarray
    static: np.ndarray
    past_names: tuple[str, ...]
    known_names: tuple[str, ...]
    static_names: tuple[str, ...]
    past_mean: np.ndarray
    past_std: np.ndarray
    known_mean: np.ndarray
    known_std: np.ndarray
    dates: np.ndarray  # length T + H
    horizon: int
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        t, v_past = self.past_observed.shape
        if self.known_future.shape != (t + self.horizon, len(self.known_names)):
            raise ValueError(f"known_future shape {self.known_future.shape} != "
                             f"({t + self.horizon}, {len(self.known_names)})")
        if v_past != len(self.past_names):
            raise ValueError("past channel names do not match matrix width")
        for name, arr in (("past_observed", self.past_observed),
                          ("known_future", self.known_future)):
            if np.isnan(arr).any():
                raise ValueError(f"{name} contains missing values")
        if self.past_names[0] != TARGET_CHANNEL:
            raise ValueError(f"first past channel must be {TARGET_CHANNEL!r}")

    @property
    def n_days(self) -> int:
        return self.past_observed.shape[0]

    def standardized_past(self) -> np.ndarray:
        return (self.past_observed - self.past_mean) / self.past_std

    def standardized_known(self, mean=None, std=None) -> np.ndarray:
        mean = self.known_mean if mean is None else mean
        std = self.known_std if std is None else std
        return (self.known_future - mean) / std

    def replace_known_channel(self, name: str, horizon_values: np.ndarray) -> "ModelInput":
        """New input with the horizon rows of one known channel swapped out."""
        if name not in self.known_names:
            raise ValueError(f"no known channel {name!r}")
        idx = self.known_names.index(name)
        values = np.asarray(horizon_values, dtype=np.float64)
        if len(values) != self.horizon:
            raise ValueError(f"expected {self.horizon} values, got {len(values)}")
        known = self.known_future.copy()
        known[self.n_days:, idx] = values
        return ModelInput(past_observed=self.past_observed, known_future=known,
                          static=self.static, past_names=self.past_names,
                          known_names=self.known_names, static_names=self.static_names,
                          past_mean=self.past_mean, past_std=self.past_std,
                          known_mean=self.known_mean, known_std=self.known_std,
                          dates=self.dates, horizon=self.horizon)


def compute_stats(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean and stdev; zero-variance channels get stdev 1."""
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


@dataclass
class ForecastResult:
    dates: np.ndarray
    point: np.ndarray
    quantile_band: np.ndarray  # H x Q, columns ordered like `quantiles`
    quantiles: tuple[float, ...]
    encoder_importance: dict[str, float]
    decoder_importance: dict[str, float]
    attention: np.ndarray
    model_kind: str

    def __post_init__(self):
        h = len(self.point)
        if self.quantile_band.shape != (h, len(self.quantiles)):
            raise ValueError("quantile band shape mismatch")
        if np.any(np.diff(self.quantile_band, axis=1) < -1e-9):
            raise ValueError("quantile band must be non-decreasing across quantiles")
        for name, imp in (("encoder", self.encoder_importance),
                          ("decoder", self.decoder_importance)):
            vals = np.array(list(imp.values()))
            if len(vals) and (vals < -1e-9).any():
                raise ValueError(f"{name} importance must be nonnegative")
            if len(vals) and abs(vals.sum() - 1.0) > 1e-6:
                raise ValueError(f"{name} importance must sum to 1")
        if (self.attention < -1e-12).any() or abs(self.attention.sum() - 1.0) > 1e-6:
            raise ValueError("attention must be a distribution over encoder steps")

    def to_dict(self) -> dict:
        return {
            "dates": [str(d) for d in self.dates],
            "point": self.point.tolist(),
            "quantiles": list(self.quantiles),
            "quantile_band": self.quantile_band.tolist(),
            "encoder_importance": self.encoder_importance,
            "decoder_importance": self.decoder_importance,
            "attention": self.attention.tolist(),
            "model_kind": self.model_kind,
        }


def sort_quantile_rows(band: np.ndarray) -> np.ndarray:
    """Monotone rearrangement: sort each row so quantiles never cross."""
    return np.sort(band, axis=1)


def uniform_importance(names) -> dict[str, float]:
    names = list(names)
    if not names:
        return {}
    w = 1.0 / len(names)
    return {n: w for n in names}


@dataclass
class TrainedModel:
    kind: str
    config: ModelConfig
    params: dict
    feature_names: dict
    norm: dict
    training_log: list = field(default_factory=list)

    def save(self, path: str) -> None:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        payload = {
            "kind": self.kind,
            "config": self.config.to_dict(),
            "params": _jsonify(self.params),
            "feature_names": self.feature_names,
            "norm": _jsonify(self.norm),
            "training_log": self.training_log,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path: str) -> "TrainedModel":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(kind=payload["kind"], config=ModelConfig(**payload["config"]),
                   params=payload["params"], feature_names=payload["feature_names"],
                   norm=payload["norm"], training_log=payload["training_log"])


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def pinball(pred, actual, q: float) -> float:
    """Mean quantile loss: max(q * e, (q - 1) * e) with e = actual - pred."""
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {actual.shape}")
    if not 0 < q < 1:
        raise ValueError(f"quantile must be in (0, 1), got {q}")
    e = actual - pred
    return float(np.mean(np.maximum(q * e, (q - 1.0) * e)))
