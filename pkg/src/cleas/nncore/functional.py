"""Array-level kernels: dense, 2-D correlation, ReLU, softmax cross-entropy."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from cleas.errors import ConfigError


def dense_forward(x, w, b):
    return x @ w + b


def dense_backward(x, w, dout):
    """Gradients of ``x @ w + b`` w.r.t. x, w and b."""
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def relu(z):
    return np.maximum(z, 0.0)


def conv2d_forward(x, w, b):
    """Valid, stride-1 cross-correlation.

    x: (N, C, H, W); w: (O, C, k, k); b: (O,). Returns (N, O, H-k+1, W-k+1).
    """
    n, c, height, width = x.shape
    o, c_w, k, k2 = w.shape
    if k != k2:
        raise ConfigError(f"non-square filter {k}x{k2}")
    if c != c_w:
        raise ConfigError(f"filter expects {c_w} input channels, got {c}")
    if k > min(height, width):
        raise ConfigError(f"filter size {k} exceeds input size {height}x{width}")
    ho, wo = height - k + 1, width - k + 1
    # (N, C, Ho, Wo, k, k) -> (N, Ho, Wo, C, k, k)
    windows = sliding_window_view(x, (k, k), axis=(2, 3)).transpose(0, 2, 3, 1, 4, 5)
    cols = windows.reshape(n * ho * wo, c * k * k)
    out = cols @ w.reshape(o, c * k * k).T + b
    return out.reshape(n, ho, wo, o).transpose(0, 3, 1, 2)


def conv2d_backward(x, w, dout):
    """Gradients of :func:`conv2d_forward` w.r.t. x, w and b."""
    n, c, height, width = x.shape
    o, _, k, _ = w.shape
    ho, wo = height - k + 1, width - k + 1
    windows = sliding_window_view(x, (k, k), axis=(2, 3)).transpose(0, 2, 3, 1, 4, 5)
    cols = windows.reshape(n * ho * wo, c * k * k)
    dflat = dout.transpose(0, 2, 3, 1).reshape(n * ho * wo, o)
    dw = (dflat.T @ cols).reshape(w.shape)
    db = dflat.sum(axis=0)
    dx = np.zeros_like(x)
    for i in range(k):
        for j in range(k):
            dx[:, :, i:i + ho, j:j + wo] += np.einsum("nohw,oc->nchw", dout, w[:, :, i, j])
    return dx, dw, db


def log_softmax(z):
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(z):
    return np.exp(log_softmax(z))


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    logp = log_softmax(logits)
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    dlogits = np.exp(logp)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
