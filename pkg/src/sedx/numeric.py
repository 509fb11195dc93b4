"""Dense float64 kernels: GRU cells and stacks with exact BPTT, affine layers,
squared-error loss and RMSProp.

Arrays follow the ``row @ W.T`` convention so every kernel accepts either a
single vector of shape ``(dim,)`` or a batch of shape ``(batch, dim)``.
Sequences are time-major: ``(steps, batch, dim)``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator, Sequence

import numpy as np
from scipy.special import expit

from .exceptions import ConfigurationError

DTYPE = np.float64


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / max(fan_in + fan_out, 1))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(DTYPE)


class _ArrayBundle:
    """Mixin for dataclasses whose fields are all ndarrays."""

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def zeros_like(self):
        return type(self)(**{k: np.zeros_like(v) for k, v in self.arrays().items()})

    def copy(self):
        return type(self)(**{k: v.copy() for k, v in self.arrays().items()})


@dataclass
class GruCellParams(_ArrayBundle):
    Wz: np.ndarray
    Wr: np.ndarray
    W: np.ndarray
    Uz: np.ndarray
    Ur: np.ndarray
    U: np.ndarray
    bz: np.ndarray
    br: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        hidden = self.U.shape[0]
        for name in ("Uz", "Ur", "U"):
            if getattr(self, name).shape != (hidden, hidden):
                raise ConfigurationError(f"{name} must be {hidden}x{hidden}, got {getattr(self, name).shape}")
        n_in = self.W.shape[1] if self.W.ndim == 2 else -1
        for name in ("Wz", "Wr", "W"):
            if getattr(self, name).shape != (hidden, n_in):
                raise ConfigurationError(f"{name} must be {hidden}x{n_in}, got {getattr(self, name).shape}")
        for name in ("bz", "br", "b"):
            if getattr(self, name).shape != (hidden,):
                raise ConfigurationError(f"{name} must have length {hidden}")

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, input_dim: int, hidden: int, rng: np.random.Generator) -> "GruCellParams":
        """Glorot-uniform weights, zero biases."""
        return cls(
            Wz=glorot_uniform(rng, hidden, input_dim),
            Wr=glorot_uniform(rng, hidden, input_dim),
            W=glorot_uniform(rng, hidden, input_dim),
            Uz=glorot_uniform(rng, hidden, hidden),
            Ur=glorot_uniform(rng, hidden, hidden),
            U=glorot_uniform(rng, hidden, hidden),
            bz=np.zeros(hidden, DTYPE),
            br=np.zeros(hidden, DTYPE),
            b=np.zeros(hidden, DTYPE),
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden: int) -> "GruCellParams":
        m = lambda r, c: np.zeros((r, c), DTYPE)  # noqa: E731
        v = lambda: np.zeros(hidden, DTYPE)  # noqa: E731
        return cls(m(hidden, input_dim), m(hidden, input_dim), m(hidden, input_dim),
                   m(hidden, hidden), m(hidden, hidden), m(hidden, hidden), v(), v(), v())


@dataclass
class GruActivations:
    """Cached quantities of one GRU step (possibly batched)."""

    u: np.ndarray
    h_prev: np.ndarray
    z: np.ndarray
    r: np.ndarray
    uh: np.ndarray  # U @ h_prev, needed for the reset-gate gradient
    h_tilde: np.ndarray
    h: np.ndarray


@dataclass
class DenseParams(_ArrayBundle):
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ConfigurationError(f"dense shapes inconsistent: W {self.W.shape}, b {self.b.shape}")

    @classmethod
    def init(cls, n_in: int, n_out: int, rng: np.random.Generator) -> "DenseParams":
        return cls(glorot_uniform(rng, n_out, n_in), np.zeros(n_out, DTYPE))

    @classmethod
    def zeros(cls, n_in: int, n_out: int) -> "DenseParams":
        return cls(np.zeros((n_out, n_in), DTYPE), np.zeros(n_out, DTYPE))


def _check_step_dims(params: GruCellParams, h_prev: np.ndarray, u: np.ndarray) -> None:
    if h_prev.shape[-1] != params.hidden_dim:
        raise ConfigurationError(f"h_prev has width {h_prev.shape[-1]}, cell hidden size is {params.hidden_dim}")
    if u.shape[-1] != params.input_dim:
        raise ConfigurationError(f"input has width {u.shape[-1]}, cell expects {params.input_dim}")


def gru_step(params: GruCellParams, h_prev, u) -> tuple[np.ndarray, GruActivations]:
    """One GRU update.

    z = sigmoid(Wz u + Uz h + bz), r = sigmoid(Wr u + Ur h + br),
    h~ = tanh(r * (U h) + W u + b), h' = z * h + (1 - z) * h~.
    """
    h_prev = np.asarray(h_prev, DTYPE)
    u = np.asarray(u, DTYPE)
    _check_step_dims(params, h_prev, u)
    return _step(params, h_prev, u, u @ params.Wz.T, u @ params.Wr.T, u @ params.W.T)


def _step(params, h_prev, u, xz, xr, xc):
    z = expit(xz + h_prev @ params.Uz.T + params.bz)
    r = expit(xr + h_prev @ params.Ur.T + params.br)
    uh = h_prev @ params.U.T
    h_tilde = np.tanh(r * uh + xc + params.b)
    h = z * h_prev + (1.0 - z) * h_tilde
    return h, GruActivations(u, h_prev, z, r, uh, h_tilde, h)


def _gate_grads(params: GruCellParams, acts: GruActivations, dh):
    """Pre-activation gradients of one step plus the gradient on h_prev."""
    z, r, c, h_prev = acts.z, acts.r, acts.h_tilde, acts.h_prev
    dz = dh * (h_prev - c)
    da_c = dh * (1.0 - z) * (1.0 - c * c)
    da_r = da_c * acts.uh * r * (1.0 - r)
    da_z = dz * z * (1.0 - z)
    duh = da_c * r
    dh_prev = dh * z + duh @ params.U + da_r @ params.Ur + da_z @ params.Uz
    return da_z, da_r, da_c, duh, dh_prev


def _outer(a, b):
    # sum of per-row outer products; works for vectors and batches alike
    if a.ndim == 1:
        return np.outer(a, b)
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def _rowsum(a):
    return a.reshape(-1, a.shape[-1]).sum(axis=0)


def gru_step_backward(params: GruCellParams, acts: GruActivations, dh, grads: GruCellParams | None = None):
    """Backpropagate through one step. Parameter gradients accumulate into
    ``grads`` (created if absent). Returns ``(grads, du, dh_prev)``."""
    if grads is None:
        grads = params.zeros_like()
    da_z, da_r, da_c, duh, dh_prev = _gate_grads(params, acts, np.asarray(dh, DTYPE))
    grads.Wz += _outer(da_z, acts.u)
    grads.Wr += _outer(da_r, acts.u)
    grads.W += _outer(da_c, acts.u)
    grads.Uz += _outer(da_z, acts.h_prev)
    grads.Ur += _outer(da_r, acts.h_prev)
    grads.U += _outer(duh, acts.h_prev)
    grads.bz += _rowsum(da_z)
    grads.br += _rowsum(da_r)
    grads.b += _rowsum(da_c)
    du = da_z @ params.Wz + da_r @ params.Wr + da_c @ params.W
    return grads, du, dh_prev


def gru_sequence_forward(params: GruCellParams, inputs, h0=None):
    """Run one cell over ``inputs`` of shape ``(steps, [batch,] input_dim)``.

    Returns ``(hs, cache)`` with ``hs`` of shape ``(steps, [batch,] hidden)``.
    """
    inputs = np.asarray(inputs, DTYPE)
    if inputs.ndim < 2:
        raise ConfigurationError("sequence input must be at least 2-d (steps, dim)")
    lead = inputs.shape[1:-1]
    if h0 is None:
        h0 = np.zeros(lead + (params.hidden_dim,), DTYPE)
    h0 = np.asarray(h0, DTYPE)
    _check_step_dims(params, h0, inputs)
    xz = inputs @ params.Wz.T
    xr = inputs @ params.Wr.T
    xc = inputs @ params.W.T
    hs = np.empty(inputs.shape[:-1] + (params.hidden_dim,), DTYPE)
    cache = []
    h = h0
    for t in range(inputs.shape[0]):
        h, acts = _step(params, h, inputs[t], xz[t], xr[t], xc[t])
        hs[t] = h
        cache.append(acts)
    return hs, cache


def gru_sequence_backward(params: GruCellParams, cache: Sequence[GruActivations], dhs):
    """Exact BPTT through a single-layer sequence.

    ``dhs`` holds upstream gradients on every h_t (same shape as the forward
    ``hs``). Returns ``(grads, d_inputs, d_h0)``.
    """
    if not cache:
        raise RuntimeError("gru_sequence_backward called without a forward cache")
    dhs = np.asarray(dhs, DTYPE)
    steps = len(cache)
    if dhs.shape[0] != steps:
        raise ConfigurationError(f"{dhs.shape[0]} upstream gradients for {steps} cached steps")
    shape = dhs.shape
    da_z = np.empty(shape, DTYPE)
    da_r = np.empty(shape, DTYPE)
    da_c = np.empty(shape, DTYPE)
    duh = np.empty(shape, DTYPE)
    carry = np.zeros(shape[1:], DTYPE)
    for t in range(steps - 1, -1, -1):
        da_z[t], da_r[t], da_c[t], duh[t], carry = _gate_grads(params, cache[t], dhs[t] + carry)
    inputs = np.stack([a.u for a in cache])
    h_prevs = np.stack([a.h_prev for a in cache])
    grads = GruCellParams(
        Wz=_outer(da_z, inputs), Wr=_outer(da_r, inputs), W=_outer(da_c, inputs),
        Uz=_outer(da_z, h_prevs), Ur=_outer(da_r, h_prevs), U=_outer(duh, h_prevs),
        bz=_rowsum(da_z), br=_rowsum(da_r), b=_rowsum(da_c),
    )
    d_inputs = da_z @ params.Wz + da_r @ params.Wr + da_c @ params.W
    return grads, d_inputs, carry


def gru_stack_forward(stack: Sequence[GruCellParams], inputs, h0s=None):
    """Stacked GRU: layer l's h_t is layer l+1's input at step t.

    Returns ``(top_hs, finals, caches)``; ``finals[l]`` is layer l's last state.
    """
    x = np.asarray(inputs, DTYPE)
    finals, caches = [], []
    for layer, cell in enumerate(stack):
        h0 = None if h0s is None else h0s[layer]
        if x.shape[0] == 0:
            lead = x.shape[1:-1]
            hs = np.zeros((0,) + lead + (cell.hidden_dim,), DTYPE)
            finals.append(np.zeros(lead + (cell.hidden_dim,), DTYPE) if h0 is None else np.asarray(h0, DTYPE))
            caches.append([])
            x = hs
            continue
        hs, cache = gru_sequence_forward(cell, x, h0)
        finals.append(hs[-1])
        caches.append(cache)
        x = hs
    return x, finals, caches


def gru_stack_backward(stack: Sequence[GruCellParams], caches, d_top=None, d_finals=None):
    """Backward pass of :func:`gru_stack_forward`.

    ``d_top`` is the upstream gradient on the top layer's outputs (or None);
    ``d_finals[l]`` is the gradient on layer l's final state (or None).
    Returns ``(grads per layer, d_inputs, d_h0 per layer)``.
    """
    n = len(stack)
    grads: list = [None] * n
    d_h0s: list = [None] * n
    d_below = None if d_top is None else np.asarray(d_top, DTYPE)
    for layer in range(n - 1, -1, -1):
        cell, cache = stack[layer], caches[layer]
        if not cache:
            raise RuntimeError("empty sequences are not differentiable")
        lead = cache[0].h.shape
        dhs = np.zeros((len(cache),) + lead, DTYPE) if d_below is None else d_below.copy()
        if d_finals is not None and d_finals[layer] is not None:
            dhs[-1] += d_finals[layer]
        grads[layer], d_below, d_h0s[layer] = gru_sequence_backward(cell, cache, dhs)
    return grads, d_below, d_h0s


def dense_forward(p: DenseParams, v) -> np.ndarray:
    v = np.asarray(v, DTYPE)
    if v.shape[-1] != p.W.shape[1]:
        raise ConfigurationError(f"dense layer expects width {p.W.shape[1]}, got {v.shape[-1]}")
    return v @ p.W.T + p.b


def dense_backward(p: DenseParams, v, dout) -> tuple[DenseParams, np.ndarray]:
    """Gradients of ``v @ W.T + b``; returns ``(param grads, dv)``."""
    v = np.asarray(v, DTYPE)
    dout = np.asarray(dout, DTYPE)
    return DenseParams(_outer(dout, v), _rowsum(dout)), dout @ p.W


def mse_loss(preds, targets) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient w.r.t. preds."""
    preds = np.asarray(preds, DTYPE)
    targets = np.asarray(targets, DTYPE)
    if preds.shape != targets.shape:
        raise ConfigurationError(f"preds {preds.shape} vs targets {targets.shape}")
    diff = preds - targets
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def rmsprop_update(theta, grad, acc, lr: float, rho: float = 0.9, eps: float = 1e-8):
    """One RMSProp step on arrays; returns ``(new_theta, new_acc)``."""
    theta, grad, acc = (np.asarray(a, DTYPE) for a in (theta, grad, acc))
    if not (theta.shape == grad.shape == acc.shape):
        raise ConfigurationError(f"shape mismatch: theta {theta.shape}, grad {grad.shape}, acc {acc.shape}")
    acc = rho * acc + (1.0 - rho) * grad * grad
    return theta - lr * grad / np.sqrt(acc + eps), acc


class RMSProp:
    """RMSProp over a fixed list of parameter arrays, updated in place."""

    def __init__(self, learning_rate: float = 0.002, rho: float = 0.9, eps: float = 1e-8):
        if not 0.0 < rho < 1.0:
            raise ConfigurationError("rho must lie in (0, 1)")
        if eps <= 0:
            raise ConfigurationError("eps must be positive")
        if learning_rate < 0:
            raise ConfigurationError("learning rate must be non-negative")
        self.learning_rate = learning_rate
        self.rho = rho
        self.eps = eps
        self.accumulators: list[np.ndarray] | None = None

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        if len(params) != len(grads):
            raise ConfigurationError(f"{len(params)} parameters but {len(grads)} gradients")
        if self.accumulators is None:
            self.accumulators = [np.zeros_like(p) for p in params]
        for theta, g, acc in zip(params, grads, self.accumulators):
            if theta.shape != g.shape:
                raise ConfigurationError(f"gradient shape {g.shape} does not match parameter {theta.shape}")
            acc *= self.rho
            acc += (1.0 - self.rho) * g * g
            theta -= self.learning_rate * g / np.sqrt(acc + self.eps)


def iter_named(prefix: str, bundle) -> Iterator[tuple[str, np.ndarray]]:
    for name, arr in bundle.arrays().items():
        yield f"{prefix}.{name}", arr
