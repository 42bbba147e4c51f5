"""Forward and reverse passes over a plain layer sequence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cleas.errors import ConfigError, NumericError
from cleas.nncore import functional as F
from cleas.nncore.params import ParamStore


@dataclass(frozen=True)
class Dense:
    name: str
    n_in: int
    n_out: int
    relu: bool = True


@dataclass(frozen=True)
class Conv:
    name: str
    in_channels: int
    out_channels: int
    kernel: int
    relu: bool = True


@dataclass(frozen=True)
class Flatten:
    name: str = "flatten"


def init_params(layout, rng, store: ParamStore | None = None) -> ParamStore:
    """Glorot-uniform weights and zero biases for every layer in ``layout``."""
    store = ParamStore() if store is None else store
    for layer in layout:
        if isinstance(layer, Dense):
            store.add(f"{layer.name}.w", F.glorot_uniform(rng, (layer.n_in, layer.n_out), layer.n_in, layer.n_out))
            store.add(f"{layer.name}.b", np.zeros(layer.n_out))
        elif isinstance(layer, Conv):
            k2 = layer.kernel * layer.kernel
            shape = (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel)
            store.add(f"{layer.name}.w", F.glorot_uniform(rng, shape, layer.in_channels * k2, layer.out_channels * k2))
            store.add(f"{layer.name}.b", np.zeros(layer.out_channels))
    return store


def forward(params: ParamStore, layout, x):
    """Run ``x`` through ``layout``; returns (logits, cache for :func:`backward`)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise ConfigError("empty batch")
    cache = []
    h = x
    for layer in layout:
        if isinstance(layer, Dense):
            w, b = params[f"{layer.name}.w"], params[f"{layer.name}.b"]
            if h.ndim != 2 or h.shape[1] != w.shape[0]:
                raise ConfigError(f"layer {layer.name}: expected input width {w.shape[0]}, got shape {h.shape[1:]}")
            z = F.dense_forward(h, w, b)
        elif isinstance(layer, Conv):
            w, b = params[f"{layer.name}.w"], params[f"{layer.name}.b"]
            if h.ndim != 4:
                raise ConfigError(f"layer {layer.name}: expected (N, C, H, W) input, got shape {h.shape}")
            try:
                z = F.conv2d_forward(h, w, b)
            except ConfigError as exc:
                raise ConfigError(f"layer {layer.name}: {exc}") from None
        elif isinstance(layer, Flatten):
            cache.append((layer, h.shape, None))
            h = h.reshape(h.shape[0], -1)
            continue
        else:
            raise ConfigError(f"unknown layer type {type(layer).__name__}")
        cache.append((layer, h, z))
        h = F.relu(z) if layer.relu else z
    return h, cache


def backward(params: ParamStore, cache, dout) -> ParamStore:
    grads = params.zeros_like()
    for layer, h_in, z in reversed(cache):
        if isinstance(layer, Flatten):
            dout = dout.reshape(h_in)
            continue
        if layer.relu:
            dout = dout * (z > 0)
        w = params[f"{layer.name}.w"]
        if isinstance(layer, Dense):
            dout, dw, db = F.dense_backward(h_in, w, dout)
        else:
            dout, dw, db = F.conv2d_backward(h_in, w, dout)
        grads.values[f"{layer.name}.w"] = dw
        grads.values[f"{layer.name}.b"] = db
    for name in grads:
        grads.values[name] = np.where(grads.masks[name], grads.values[name], 0.0)
    return grads


def loss_and_grad(params: ParamStore, layout, x, labels, batch_index: int | None = None):
    """Mean softmax cross-entropy and its masked gradient."""
    labels = np.asarray(labels)
    with np.errstate(invalid="ignore", over="ignore"):
        logits, cache = forward(params, layout, x)
        n_classes = logits.shape[1]
        if labels.min() < 0 or labels.max() >= n_classes:
            raise ConfigError(f"labels must lie in [0, {n_classes})")
        loss, dlogits = F.softmax_cross_entropy(logits, labels)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss in batch {batch_index}", batch_index)
    return loss, backward(params, cache, dlogits)


def predict(params: ParamStore, layout, x, batch_size: int = 2048):
    chunks = [forward(params, layout, x[i:i + batch_size])[0] for i in range(0, len(x), batch_size)]
    return np.concatenate(chunks)
