"""TFT-lite: interpretable sequence forecaster with quantile outputs.

Pipeline per window: per-variable linear embeddings feed softmax variable
selection (one network for encoder inputs, one for decoder knowns) with a
static category embedding added as context; an LSTM encoder-decoder runs
over the selected embeddings with a shared GLU residual gate; decoder
queries attend over encoder positions with per-head query/key projections
but one shared value projection, so the head-averaged attention is exactly
the mixture applied to values; a gated residual network feeds the
linear quantile head, trained with pinball loss.

Omissions versus the full published architecture, by design: no
per-variable GRN pre-encoders (plain linear embeddings), a single
attention block, no layer normalization, and one static embedding rather
than dedicated static covariate encoders.

Internal flattened layout is time-major: row t * B + w holds window w at
step t, so per-timestep batches are contiguous slices and per-window
sequences are strided gathers.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .common import (ForecastResult, ModelConfig, ModelInput, TrainedModel,
                     sort_quantile_rows)
from . import neural as nn


def _grn_init(store, prefix, d_in, d_hidden, d_out, rng):
    nn.linear_init(store, f"{prefix}.fc1", d_in, d_hidden, rng)
    nn.linear_init(store, f"{prefix}.fc2", d_hidden, d_out, rng)
    nn.linear_init(store, f"{prefix}.gate", d_out, d_out, rng)
    nn.linear_init(store, f"{prefix}.cand", d_out, d_out, rng)
    if d_in != d_out:
        nn.linear_init(store, f"{prefix}.skip", d_in, d_out, rng)


def grn(store, prefix, x: ad.Value) -> ad.Value:
    """Gated residual network: nonlinearity with a GLU-gated skip."""
    eta = nn.linear(store, f"{prefix}.fc2", ad.elu(nn.linear(store, f"{prefix}.fc1", x)))
    glu = ad.mul(ad.sigmoid(nn.linear(store, f"{prefix}.gate", eta)),
                 nn.linear(store, f"{prefix}.cand", eta))
    skip = nn.linear(store, f"{prefix}.skip", x) if f"{prefix}.skip.W" in store else x
    return ad.add(skip, glu)


def _vsn_init(store, prefix, n_vars, hidden, rng):
    for v in range(n_vars):
        nn.linear_init(store, f"{prefix}.embed{v}", 1, hidden, rng)
    _grn_init(store, f"{prefix}.grn", n_vars * hidden, hidden, n_vars, rng)


def vsn(store, prefix, flat: np.ndarray, hidden: int) -> tuple[ad.Value, ad.Value]:
    """Variable selection: returns (selected (N, d), weights (N, V))."""
    n_vars = flat.shape[1]
    embeddings = [nn.linear(store, f"{prefix}.embed{v}", ad.Value(flat[:, v:v + 1]))
                  for v in range(n_vars)]
    weights = ad.softmax(grn(store, f"{prefix}.grn", ad.concat(embeddings, axis=1)), axis=1)
    combined = None
    for v, emb in enumerate(embeddings):
        scaled = ad.col_scale(emb, weights[:, v:v + 1])
        combined = scaled if combined is None else ad.add(combined, scaled)
    return combined, weights


def _glu_init(store, prefix, d, rng):
    nn.linear_init(store, f"{prefix}.gate", d, d, rng)
    nn.linear_init(store, f"{prefix}.cand", d, d, rng)


def _glu(store, prefix, x: ad.Value) -> ad.Value:
    return ad.mul(ad.sigmoid(nn.linear(store, f"{prefix}.gate", x)),
                  nn.linear(store, f"{prefix}.cand", x))


def init_params(store: ad.ParamStore, n_enc_vars: int, n_dec_vars: int, n_static: int,
                config: ModelConfig, rng: np.random.Generator) -> None:
    d = config.hidden
    if d % config.heads != 0:
        raise ValueError(f"hidden {d} not divisible by heads {config.heads}")
    dh = d // config.heads
    _vsn_init(store, "enc_vsn", n_enc_vars, d, rng)
    _vsn_init(store, "dec_vsn", n_dec_vars, d, rng)
    store.param("static.W", nn.glorot(rng, max(n_static, 1), d))
    nn.lstm_init(store, "enc_lstm", d, d, rng)
    nn.lstm_init(store, "dec_lstm", d, d, rng)
    _glu_init(store, "post_lstm", d, rng)
    for head in range(config.heads):
        nn.linear_init(store, f"attn.q{head}", d, dh, rng)
        nn.linear_init(store, f"attn.k{head}", d, dh, rng)
    nn.linear_init(store, "attn.v", d, dh, rng)
    nn.linear_init(store, "attn.out", dh, d, rng)
    _glu_init(store, "post_attn", d, rng)
    _grn_init(store, "final_grn", d, d, d, rng)
    nn.linear_init(store, "head", d, len(config.quantiles), rng)


def forward(store: ad.ParamStore, enc_flat: np.ndarray, dec_flat: np.ndarray,
            static_onehot: np.ndarray, b: int, config: ModelConfig):
    """Run the full pipeline over ``b`` stacked windows.

    enc_flat is (b*E, V_enc) and dec_flat (b*H, V_dec), both time-major.
    Returns (quantile output (b*H, Q) window-major, diagnostics).
    """
    d = config.hidden
    e_len = enc_flat.shape[0] // b
    h_len = dec_flat.shape[0] // b

    enc_emb, enc_weights = vsn(store, "enc_vsn", enc_flat, d)
    dec_emb, dec_weights = vsn(store, "dec_vsn", dec_flat, d)
    static_vec = ad.reshape(ad.matmul(ad.Value(static_onehot[None, :]), store["static.W"]), (d,))
    enc_emb = ad.add_bias(enc_emb, static_vec)
    dec_emb = ad.add_bias(dec_emb, static_vec)

    h = ad.Value(np.zeros((b, d)))
    c = ad.Value(np.zeros((b, d)))
    enc_states = []
    for t in range(e_len):
        h, c = nn.lstm_step(store, "enc_lstm", enc_emb[t * b:(t + 1) * b, :], h, c, d)
        enc_states.append(h)
    dec_states = []
    for t in range(h_len):
        h, c = nn.lstm_step(store, "dec_lstm", dec_emb[t * b:(t + 1) * b, :], h, c, d)
        dec_states.append(h)

    enc_lstm = ad.concat(enc_states, axis=0)  # time-major, matches enc_emb
    dec_lstm = ad.concat(dec_states, axis=0)
    phi_enc = ad.add(enc_emb, _glu(store, "post_lstm", enc_lstm))
    phi_dec = ad.add(dec_emb, _glu(store, "post_lstm", dec_lstm))

    dh = d // config.heads
    scale = 1.0 / np.sqrt(dh)
    outputs = []
    attentions = []
    for w in range(b):
        enc_rows = np.arange(e_len) * b + w
        dec_rows = np.arange(h_len) * b + w
        enc_w = phi_enc[enc_rows, :]
        dec_w = phi_dec[dec_rows, :]
        values = ad.matmul(enc_w, store["attn.v.W"])  # shared across heads
        avg_attn = None
        for head in range(config.heads):
            q = nn.linear(store, f"attn.q{head}", dec_w)
            k = nn.linear(store, f"attn.k{head}", enc_w)
            attn = ad.softmax(ad.mul(ad.matmul(q, ad.transpose(k)), scale), axis=1)
            avg_attn = attn if avg_attn is None else ad.add(avg_attn, attn)
        avg_attn = ad.mul(avg_attn, 1.0 / config.heads)
        context = nn.linear(store, "attn.out", ad.matmul(avg_attn, values))
        psi = ad.add(dec_w, _glu(store, "post_attn", context))
        outputs.append(nn.linear(store, "head", grn(store, "final_grn", psi)))
        attentions.append(avg_attn)

    out = ad.concat(outputs, axis=0)  # window-major (b*H, Q)
    return out, {"enc_weights": enc_weights, "dec_weights": dec_weights,
                 "attentions": attentions}


def _flatten_time_major(slab: np.ndarray) -> np.ndarray:
    # (B, T, V) -> (T*B, V) with row t*B + w
    return slab.transpose(1, 0, 2).reshape(-1, slab.shape[2])


def _prepare(model_input: ModelInput, norm: dict):
    past = nn.standardize_with(model_input.past_observed, norm["past_mean"], norm["past_std"])
    known = nn.standardize_with(model_input.known_future, norm["known_mean"], norm["known_std"])
    enc_all = np.concatenate([past, known[:past.shape[0]]], axis=1)
    return enc_all, known


def fit_tft(model_input: ModelInput, config: ModelConfig) -> TrainedModel:
    rng = np.random.default_rng(config.seed)
    norm = nn.model_norm(model_input)
    enc_all, known = _prepare(model_input, norm)
    target = nn.standardize_with(model_input.past_observed[:, 0],
                                 norm["past_mean"][0], norm["past_std"][0])
    positions = nn.window_positions(model_input.n_days, config.encoder, config.horizon,
                                    config.window_stride, config.max_windows)
    train_pos, val_pos = nn.split_validation(positions)
    q = tuple(config.quantiles)

    store = ad.ParamStore()
    init_params(store, enc_all.shape[1], known.shape[1], len(model_input.static), config, rng)

    def batch(positions):
        enc = _flatten_time_major(nn.stack_windows(enc_all, positions, 0, config.encoder))
        dec = _flatten_time_major(nn.stack_windows(known, positions, config.horizon,
                                                   config.horizon))
        targets = np.concatenate([target[p + 1: p + 1 + config.horizon] for p in positions])
        return enc, dec, targets

    train_enc, train_dec, train_targets = batch(train_pos)
    val_enc, val_dec, val_targets = batch(val_pos)
    static = np.asarray(model_input.static, dtype=np.float64)

    def train_loss():
        out, _ = forward(store, train_enc, train_dec, static, len(train_pos), config)
        return nn.pinball_loss(out, train_targets, q, config.loss)

    def val_loss():
        out, _ = forward(store, val_enc, val_dec, static, len(val_pos), config)
        return float(nn.pinball_loss(out, val_targets, q, config.loss).data)

    log = nn.fit_loop(store, train_loss, val_loss, config)
    return TrainedModel(kind="tft", config=config, params=store.state_dict(),
                        feature_names={"past": list(model_input.past_names),
                                       "known": list(model_input.known_names),
                                       "static": list(model_input.static_names)},
                        norm=norm, training_log=log)


def _predict_raw(model: TrainedModel, model_input: ModelInput):
    config = model.config
    norm = {k: np.asarray(v) for k, v in model.norm.items()}
    store = ad.ParamStore()
    store.load_state_dict({k: np.asarray(v) for k, v in model.params.items()})
    enc_all, known = _prepare(model_input, norm)
    e = config.encoder
    if enc_all.shape[0] < e:
        raise ValueError(f"window of {enc_all.shape[0]} days shorter than encoder {e}")
    enc = enc_all[-e:, :]
    dec = known[model_input.n_days:model_input.n_days + config.horizon, :]
    static = np.asarray(model_input.static, dtype=np.float64)
    out, diag = forward(store, enc, dec, static, 1, config)
    return out.data, diag, norm


def _importance(weights: np.ndarray, names) -> dict[str, float]:
    mean = weights.mean(axis=0)
    mean = mean / mean.sum()
    return {n: float(w) for n, w in zip(names, mean)}


def predict_tft(model: TrainedModel, model_input: ModelInput) -> ForecastResult:
    config = model.config
    out, diag, norm = _predict_raw(model, model_input)
    q = tuple(config.quantiles)
    band = sort_quantile_rows(out) * norm["past_std"][0] + norm["past_mean"][0]
    enc_names = model.feature_names["past"] + model.feature_names["known"]
    attention = diag["attentions"][0].data.mean(axis=0)
    attention = attention / attention.sum()
    return ForecastResult(
        dates=model_input.dates[model_input.n_days:model_input.n_days + config.horizon],
        point=band[:, config.median_index], quantile_band=band, quantiles=q,
        encoder_importance=_importance(diag["enc_weights"].data, enc_names),
        decoder_importance=_importance(diag["dec_weights"].data, model.feature_names["known"]),
        attention=attention, model_kind="tft")


def interpret_tft(model: TrainedModel, model_input: ModelInput) -> dict:
    """Time-averaged variable-selection weights and head-averaged attention.

    Peer CPC channels are reported individually and rolled into one
    "competitors" aggregate.
    """
    if model.kind != "tft":
        raise ValueError(f"interpretability export requires a tft model, got {model.kind}")
    result = predict_tft(model, model_input)
    competitors = sum(w for name, w in result.encoder_importance.items()
                      if name.startswith("peer_") or name == "cluster_mean_cpc")
    return {"encoder_importance": result.encoder_importance,
            "decoder_importance": result.decoder_importance,
            "competitors_total": float(competitors),
            "attention": result.attention}
