"""Seasonal multi-encoder GRU encoder-decoder (SEDX) and its non-seasonal
ablation (BEDX, the ``P == 0`` case of the same network).

Encoder 0 summarises the standard lags, encoder i the group of lags just
before ``t - iS``. Final states of every layer of every encoder are
concatenated into a context vector, projected affinely into the decoder's
initial state and (optionally) appended to each decoder input. The decoder
runs K+1 steps over future exogenous values plus the synchronised seasonal
pairs and an affine head maps each top-layer state to a scalar forecast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, ExogenousHorizonError, WindowRangeError
from .numeric import (
    DTYPE,
    DenseParams,
    GruCellParams,
    dense_backward,
    dense_forward,
    gru_stack_backward,
    gru_stack_forward,
    mse_loss,
)
from .windowing import SeasonalSpec, TimeSeries, WindowBatch, WindowExample, build_batch, check_anchor


@dataclass
class SedxParams:
    spec: SeasonalSpec
    n_exog: int
    hidden: int
    layers: int
    encoders: list
    decoder: list
    ctx_proj: DenseParams
    head: DenseParams
    feed_context: bool = True
    include_encoder0_context: bool = True

    @classmethod
    def init(cls, spec: SeasonalSpec, n_exog: int = 0, hidden: int = 7, layers: int = 1, *,
             feed_context: bool = True, include_encoder0_context: bool = True,
             rng: np.random.Generator | int | None = 0) -> "SedxParams":
        if hidden < 1 or layers < 1:
            raise ConfigurationError("hidden and layers must be >= 1")
        rng = np.random.default_rng(rng)
        if spec.P == 0:
            include_encoder0_context = True
        enc_in = n_exog + 1
        encoders = [[GruCellParams.init(enc_in if l == 0 else hidden, hidden, rng) for l in range(layers)]
                    for _ in range(spec.P + 1)]
        ctx = cls.context_size(spec, hidden, layers, include_encoder0_context)
        dec_in = n_exog + spec.P * (n_exog + 1) + (ctx if feed_context else 0)
        decoder = [GruCellParams.init(dec_in if l == 0 else hidden, hidden, rng) for l in range(layers)]
        return cls(spec, n_exog, hidden, layers, encoders, decoder,
                   DenseParams.init(ctx, hidden * layers, rng), DenseParams.init(hidden, 1, rng),
                   feed_context, include_encoder0_context)

    @staticmethod
    def context_size(spec, hidden, layers, include_encoder0_context=True) -> int:
        n_enc = spec.P + 1 if include_encoder0_context or spec.P == 0 else spec.P
        return n_enc * hidden * layers

    @property
    def decoder_input_dim(self) -> int:
        return self.decoder[0].input_dim

    def bundles(self):
        """(prefix, bundle) pairs in a fixed order."""
        out = []
        for i, stack in enumerate(self.encoders):
            out.extend((f"encoder{i}.layer{l}", cell) for l, cell in enumerate(stack))
        out.extend((f"decoder.layer{l}", cell) for l, cell in enumerate(self.decoder))
        out.append(("ctx_proj", self.ctx_proj))
        out.append(("head", self.head))
        return out

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [(f"{prefix}.{k}", v) for prefix, b in self.bundles() for k, v in b.arrays().items()]

    def arrays(self) -> list[np.ndarray]:
        return [a for _, a in self.named_arrays()]

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def _rebuild(self, fn) -> "SedxParams":
        return SedxParams(
            self.spec, self.n_exog, self.hidden, self.layers,
            [[fn(c) for c in stack] for stack in self.encoders],
            [fn(c) for c in self.decoder], fn(self.ctx_proj), fn(self.head),
            self.feed_context, self.include_encoder0_context)

    def zeros_like(self) -> "SedxParams":
        return self._rebuild(lambda b: b.zeros_like())

    def copy(self) -> "SedxParams":
        return self._rebuild(lambda b: b.copy())

    def load_arrays(self, named: dict) -> None:
        """Overwrite parameters in place from a name -> array mapping."""
        for name, arr in self.named_arrays():
            src = np.asarray(named[name], DTYPE)
            if src.shape != arr.shape:
                raise ConfigurationError(f"{name}: stored shape {src.shape} != expected {arr.shape}")
            arr[...] = src

    def config(self) -> dict:
        return {"spec": self.spec.to_dict(), "n_exog": self.n_exog, "hidden": self.hidden,
                "layers": self.layers, "feed_context": self.feed_context,
                "include_encoder0_context": self.include_encoder0_context}

    @classmethod
    def from_config(cls, cfg: dict) -> "SedxParams":
        spec = SeasonalSpec(**cfg["spec"])
        return cls.init(spec, cfg["n_exog"], cfg["hidden"], cfg["layers"], feed_context=cfg["feed_context"],
                        include_encoder0_context=cfg["include_encoder0_context"], rng=0)


@dataclass
class _ForwardCache:
    enc_caches: list
    context: np.ndarray
    dec_caches: list
    dec_top: np.ndarray
    single: bool


def _as_batch(w) -> tuple[WindowBatch, bool]:
    if isinstance(w, WindowExample):
        return WindowBatch([np.asarray(e, DTYPE)[:, None, :] for e in w.encoder_inputs],
                           np.asarray(w.decoder_inputs, DTYPE)[:, None, :],
                           np.asarray(w.targets, DTYPE)[None, :], np.array([w.anchor_t])), True
    return w, False


def _check_shapes(params: SedxParams, batch: WindowBatch) -> None:
    spec = params.spec
    if len(batch.encoder_inputs) != spec.P + 1:
        raise ConfigurationError(f"window has {len(batch.encoder_inputs)} encoder inputs, model expects {spec.P + 1}")
    steps = [spec.p] + list(spec.Q)
    for i, (e, n) in enumerate(zip(batch.encoder_inputs, steps)):
        if e.shape[0] != n or e.shape[-1] != params.n_exog + 1:
            raise ConfigurationError(f"encoder {i} input shape {e.shape} does not match ({n}, *, {params.n_exog + 1})")
    want = params.n_exog + spec.P * (params.n_exog + 1)
    if batch.decoder_inputs.shape[0] != spec.horizon or batch.decoder_inputs.shape[-1] != want:
        raise ConfigurationError(
            f"decoder input shape {batch.decoder_inputs.shape} does not match ({spec.horizon}, *, {want})")


def forward(params: SedxParams, w) -> tuple[np.ndarray, _ForwardCache]:
    """Predictions for a window (shape (K+1,)) or batch (shape (B, K+1))."""
    batch, single = _as_batch(w)
    _check_shapes(params, batch)
    H, L = params.hidden, params.layers
    enc_caches, finals = [], []
    for stack, inputs in zip(params.encoders, batch.encoder_inputs):
        _, fin, cache = gru_stack_forward(stack, inputs)
        enc_caches.append(cache)
        finals.append(fin)
    ctx_parts = finals if params.include_encoder0_context else finals[1:]
    context = np.concatenate([h for fin in ctx_parts for h in fin], axis=-1)
    init = dense_forward(params.ctx_proj, context)
    h0s = [init[:, l * H:(l + 1) * H] for l in range(L)]
    if not params.include_encoder0_context:
        h0s = [h + f for h, f in zip(h0s, finals[0])]
    dec_in = batch.decoder_inputs
    if params.feed_context:
        dec_in = np.concatenate([dec_in, np.broadcast_to(context, (dec_in.shape[0],) + context.shape)], axis=-1)
    top, _, dec_caches = gru_stack_forward(params.decoder, dec_in, h0s)
    preds = dense_forward(params.head, top)[..., 0].T  # (B, K+1)
    cache = _ForwardCache(enc_caches, context, dec_caches, top, single)
    return (preds[0] if single else preds), cache


def backward(params: SedxParams, cache: _ForwardCache, dpreds) -> SedxParams:
    """Exact gradients of ``sum(dpreds * preds)`` w.r.t. every parameter."""
    dpreds = np.asarray(dpreds, DTYPE)
    if cache.single:
        dpreds = dpreds[None, :]
    H, L = params.hidden, params.layers
    grads = params.zeros_like()
    dout = dpreds.T[..., None]  # (K+1, B, 1)
    g_head, d_top = dense_backward(params.head, cache.dec_top, dout)
    grads.head = g_head
    dec_grads, d_dec_in, d_h0s = gru_stack_backward(params.decoder, cache.dec_caches, d_top)
    grads.decoder = dec_grads
    d_init = np.concatenate(d_h0s, axis=-1)
    g_ctx, d_context = dense_backward(params.ctx_proj, cache.context, d_init)
    grads.ctx_proj = g_ctx
    if params.feed_context:
        d_context = d_context + d_dec_in[..., -cache.context.shape[-1]:].sum(axis=0)
    start = 0 if params.include_encoder0_context else 1
    chunks = np.split(d_context, (len(params.encoders) - start) * L, axis=-1)
    for i in range(len(params.encoders)):
        if i < start:
            d_fin = d_h0s  # encoder 0 state is added to the decoder initial state
        else:
            j = i - start
            d_fin = chunks[j * L:(j + 1) * L]
        enc_grads, _, _ = gru_stack_backward(params.encoders[i], cache.enc_caches[i], None, d_fin)
        grads.encoders[i] = enc_grads
    return grads


def loss_and_grad(params: SedxParams, batch) -> tuple[float, SedxParams]:
    """Mean squared error over all decoder outputs of a batch and its gradient."""
    preds, cache = forward(params, batch)
    targets = batch.targets if isinstance(batch, WindowBatch) else np.asarray(batch.targets, DTYPE)
    loss, dpreds = mse_loss(preds, targets)
    return loss, backward(params, cache, dpreds)


def predict_batch(params: SedxParams, batch: WindowBatch) -> np.ndarray:
    return forward(params, batch)[0]


def forward_bedx(params: SedxParams, w):
    """Forward pass of the single-encoder ablation."""
    if params.spec.P != 0:
        raise ConfigurationError("forward_bedx needs a network built with P == 0")
    return forward(params, w)


def extend_for_forecast(ts: TimeSeries, last: int, future_x=None) -> TimeSeries:
    """Pad ``ts`` up to index ``last`` with future exogenous rows (and
    placeholder zeros for the unknown y)."""
    T = len(ts)
    if last < T:
        return ts
    n_new = last + 1 - T
    if ts.n_exog:
        if future_x is None:
            raise ExogenousHorizonError(f"exogenous horizon unavailable: need x up to index {last}, series ends at {T - 1}")
        fx = np.asarray(future_x, DTYPE).reshape(-1, ts.n_exog)
        if fx.shape[0] < n_new:
            raise ExogenousHorizonError(
                f"exogenous horizon unavailable: need {n_new} future rows of x, got {fx.shape[0]}")
        x = np.vstack([ts.x, fx[:n_new]])
    else:
        x = np.zeros((last + 1, 0))
    return TimeSeries(ts.id, np.concatenate([ts.y, np.zeros(n_new)]), x)


def predict_multi_step(params: SedxParams, ts: TimeSeries, t: int, future_x=None) -> np.ndarray:
    """One-shot K+1 step forecast from anchor ``t`` (y(t) onward unknown)."""
    spec = params.spec
    if t > len(ts):
        raise WindowRangeError(f"anchor t={t} lies beyond the observed history (T={len(ts)})", bound="history")
    check_anchor(spec, len(ts), t, need_targets=False)
    full = extend_for_forecast(ts, t + spec.K, future_x)
    batch = build_batch(full, spec, [t], with_targets=False)
    return forward(params, batch)[0][0]
