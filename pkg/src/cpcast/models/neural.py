"""Shared machinery for the sequence models: cells, windows, training loop.

Training windows slide over one advertiser's composed history; each window
pairs an encoder span with the following horizon of targets. Batches stack
windows, and all recurrent math happens on 2-d (batch x feature) arrays
through the autodiff kernel. Everything is float64 and seed-deterministic.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .common import ModelConfig, ModelInput


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def lstm_init(store: ad.ParamStore, prefix: str, v_in: int, hidden: int,
              rng: np.random.Generator) -> None:
    store.param(f"{prefix}.Wx", glorot(rng, v_in, 4 * hidden))
    store.param(f"{prefix}.Wh", glorot(rng, hidden, 4 * hidden))
    bias = np.zeros(4 * hidden)
    bias[hidden:2 * hidden] = 1.0  # forget-gate bias keeps early memory open
    store.param(f"{prefix}.b", bias)


def lstm_step(store: ad.ParamStore, prefix: str, x: ad.Value, h: ad.Value,
              c: ad.Value, hidden: int) -> tuple[ad.Value, ad.Value]:
    gates = ad.add_bias(ad.add(ad.matmul(x, store[f"{prefix}.Wx"]),
                               ad.matmul(h, store[f"{prefix}.Wh"])),
                        store[f"{prefix}.b"])
    i = ad.sigmoid(gates[:, 0:hidden])
    f = ad.sigmoid(gates[:, hidden:2 * hidden])
    g = ad.tanh(gates[:, 2 * hidden:3 * hidden])
    o = ad.sigmoid(gates[:, 3 * hidden:4 * hidden])
    c_next = ad.add(ad.mul(f, c), ad.mul(i, g))
    h_next = ad.mul(o, ad.tanh(c_next))
    return h_next, c_next


def linear_init(store: ad.ParamStore, prefix: str, d_in: int, d_out: int,
                rng: np.random.Generator) -> None:
    store.param(f"{prefix}.W", glorot(rng, d_in, d_out))
    store.param(f"{prefix}.b", np.zeros(d_out))


def linear(store: ad.ParamStore, prefix: str, x: ad.Value) -> ad.Value:
    return ad.add_bias(ad.matmul(x, store[f"{prefix}.W"]), store[f"{prefix}.b"])


def window_positions(n_days: int, encoder: int, horizon: int, stride: int,
                     max_windows: int) -> list[int]:
    """As-of indices (encoder end) from the most recent backwards."""
    last = n_days - 1 - horizon
    first = encoder - 1
    if last < first:
        raise ValueError(f"history of {n_days} days cannot fit encoder {encoder} "
                         f"+ horizon {horizon}")
    positions = list(range(last, first - 1, -stride))[:max_windows]
    return sorted(positions)


def split_validation(positions: list[int]) -> tuple[list[int], list[int]]:
    """Hold out the most recent tenth of windows (at least one) for early stop."""
    if len(positions) < 3:
        return positions, positions
    n_val = max(1, len(positions) // 10)
    return positions[:-n_val], positions[-n_val:]


def stack_windows(matrix: np.ndarray, positions: list[int], offset: int,
                  length: int) -> np.ndarray:
    """(B, length, V) slab of rows [pos + offset - length + 1 .. pos + offset]."""
    return np.stack([matrix[p + offset - length + 1: p + offset + 1] for p in positions])


def pinball_loss(pred: ad.Value, targets: np.ndarray, quantiles, mode: str = "pinball") -> ad.Value:
    """Mean loss over rows and quantile columns; pred is (N, Q), targets (N,)."""
    q = np.asarray(quantiles, dtype=np.float64)
    tile = ad.Value(np.tile(targets[:, None], (1, len(q))))
    err = ad.sub(tile, pred)
    if mode == "mse":
        return ad.vmean(ad.mul(err, err))
    q_mat = ad.Value(np.tile(q[None, :], (len(targets), 1)))
    one_minus = ad.Value(np.tile((1.0 - q)[None, :], (len(targets), 1)))
    return ad.vmean(ad.add(ad.mul(q_mat, ad.relu(err)),
                           ad.mul(one_minus, ad.relu(ad.mul(err, -1.0)))))


def clip_gradients(store: ad.ParamStore, max_norm: float) -> None:
    """Scale all gradients so their global norm is at most ``max_norm``."""
    if max_norm <= 0:
        return
    total = 0.0
    for v in store.values():
        if v.grad is not None:
            total += float(np.sum(v.grad * v.grad))
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for v in store.values():
            if v.grad is not None:
                v.grad *= scale


def fit_loop(store: ad.ParamStore, train_loss, val_loss, config: ModelConfig) -> list:
    """Adam epochs with patience-based early stopping; restores the best state.

    ``train_loss()`` builds the graph loss; ``val_loss()`` returns a float.
    """
    log = []
    best = np.inf
    best_state = store.state_dict()
    patience_left = config.patience
    for epoch in range(config.epochs):
        store.zero_grad()
        loss = train_loss()
        if not np.isfinite(loss.data):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}")
        ad.backward(loss, store)
        clip_gradients(store, config.clip_norm)
        ad.adam_step(store, lr=config.lr)
        current = val_loss()
        log.append([float(loss.data), float(current)])
        if current < best - 1e-12:
            best = current
            best_state = store.state_dict()
            patience_left = config.patience
        else:
            patience_left -= 1
            if patience_left <= 0:
                break
    store.load_state_dict(best_state)
    return log


def standardize_with(matrix: np.ndarray, mean, std) -> np.ndarray:
    return (matrix - np.asarray(mean)) / np.asarray(std)


def model_norm(model_input: ModelInput) -> dict:
    return {"past_mean": model_input.past_mean, "past_std": model_input.past_std,
            "known_mean": model_input.known_mean, "known_std": model_input.known_std}
