"""SGD, Adam and RMSProp with masked (freeze-respecting) updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cleas.errors import ConfigError, InvariantError
from cleas.nncore.params import ParamStore

KINDS = ("sgd", "adam", "rmsprop")


@dataclass
class OptimizerState:
    kind: str
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    rho: float = 0.9
    eps: float = 1e-8
    step_count: int = 0
    slots: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown optimizer {self.kind!r}; expected one of {KINDS}")


def make_optimizer(kind: str, params: ParamStore, lr: float, **hyper) -> OptimizerState:
    """Create an optimizer with accumulators for every entry that has a trainable element."""
    opt = OptimizerState(kind=kind, lr=lr, **hyper)
    names = {"sgd": (), "adam": ("m", "v"), "rmsprop": ("ms",)}[kind]
    for key, mask in params.masks.items():
        if mask.any():
            opt.slots[key] = {slot: np.zeros_like(params[key]) for slot in names}
    return opt


def step(opt: OptimizerState, params: ParamStore, grads: ParamStore) -> ParamStore:
    """Apply one update in place and return ``params``; frozen entries are never written."""
    opt.step_count += 1
    t = opt.step_count
    for key, mask in params.masks.items():
        if not mask.any():
            continue
        if key not in opt.slots:
            raise InvariantError(f"no optimizer accumulator for trainable entry {key!r}")
        if key not in grads:
            raise InvariantError(f"gradient missing for {key!r}")
        g = grads[key]
        p = params.values[key]
        slots = opt.slots[key]
        if opt.kind == "sgd":
            updated = p - opt.lr * g
        elif opt.kind == "adam":
            slots["m"] = np.where(mask, opt.beta1 * slots["m"] + (1.0 - opt.beta1) * g, slots["m"])
            slots["v"] = np.where(mask, opt.beta2 * slots["v"] + (1.0 - opt.beta2) * g * g, slots["v"])
            m_hat = slots["m"] / (1.0 - opt.beta1 ** t)
            v_hat = slots["v"] / (1.0 - opt.beta2 ** t)
            updated = p - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
        else:
            slots["ms"] = np.where(mask, opt.rho * slots["ms"] + (1.0 - opt.rho) * g * g, slots["ms"])
            updated = p - opt.lr * g / (np.sqrt(slots["ms"]) + opt.eps)
        params.values[key] = np.where(mask, updated, p)
    return params
