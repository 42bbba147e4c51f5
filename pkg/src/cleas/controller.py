"""LSTM policy that emits one use/drop decision per hyper-network slot.

The controller reads a *state string*: for every slot, the one-hot of the
slot's previous action concatenated with the one-hot of its layer index.  Step
``j`` of the LSTM consumes state element ``j`` and emits a distribution over
the action alphabet for slot ``j`` through a slot-specific output projection.

The standard (ablation) controller instead feeds back its own previous action
(step 1 sees an all-zero start vector) and samples a full rollout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cleas.cleasc import FOUR_WAY
from cleas.errors import ConfigError, NumericError
from cleas.nncore.functional import log_softmax
from cleas.nncore.params import ParamStore
from cleas.tasknet import TWO_WAY

GATES = 4  # input, forget, output, candidate


@dataclass(frozen=True)
class StateLayout:
    """Slot-to-layer map plus action alphabet; fixes the width of every state element."""

    slot_layers: tuple[int, ...]
    n_layers: int
    alphabet: tuple[str, ...] = TWO_WAY

    def __post_init__(self):
        object.__setattr__(self, "slot_layers", tuple(int(i) for i in self.slot_layers))
        if self.alphabet not in (TWO_WAY, FOUR_WAY):
            raise ConfigError(f"alphabet must be {TWO_WAY} or {FOUR_WAY}")
        if not self.slot_layers or min(self.slot_layers) < 0 or max(self.slot_layers) >= self.n_layers:
            raise ConfigError("slot layer indices out of range")

    @classmethod
    def for_spec(cls, spec, four_way: bool = False) -> StateLayout:
        return cls(tuple(spec.slot_layers()), spec.n_layers, FOUR_WAY if four_way else TWO_WAY)

    @property
    def n(self) -> int:
        return len(self.slot_layers)

    @property
    def n_actions(self) -> int:
        return len(self.alphabet)

    @property
    def width(self) -> int:
        return self.n_actions + self.n_layers

    def layer_block(self) -> np.ndarray:
        block = np.zeros((self.n, self.n_layers))
        block[np.arange(self.n), self.slot_layers] = 1.0
        return block


def next_state(actions, layout: StateLayout) -> np.ndarray:
    """State string whose element j is one-hot(actions[j]) followed by one-hot(layer of j)."""
    actions = np.asarray(actions, dtype=np.int64)
    if actions.shape != (layout.n,):
        raise ConfigError(f"expected {layout.n} actions, got {actions.shape}")
    if actions.min() < 0 or actions.max() >= layout.n_actions:
        raise ConfigError("action index outside the alphabet")
    onehot = np.zeros((layout.n, layout.n_actions))
    onehot[np.arange(layout.n), actions] = 1.0
    return np.concatenate([onehot, layout.layer_block()], axis=1)


def random_state(layout: StateLayout, rng) -> np.ndarray:
    """Uniformly random action block, correct layer block."""
    return next_state(rng.integers(0, layout.n_actions, size=layout.n), layout)


def check_state(state, layout: StateLayout) -> None:
    state = np.asarray(state)
    if state.shape != (layout.n, layout.width):
        raise ConfigError(f"state must have shape {(layout.n, layout.width)}, got {state.shape}")
    action_block = state[:, :layout.n_actions]
    layer_block = state[:, layout.n_actions:]
    if not (np.all(action_block.sum(axis=1) == 1) and np.all(np.isin(action_block, (0.0, 1.0)))):
        raise ConfigError("action block is not one-hot")
    if not np.array_equal(layer_block, layout.layer_block()):
        raise ConfigError("layer block does not match the hyper-network layout")


def init_controller(layout: StateLayout, hidden: int = 64, rng=None, scale: float = 0.1,
                    input_width: int | None = None) -> ParamStore:
    """Controller parameters: uniform(-scale, scale) weights, zero biases; ``scale=0`` or ``rng=None`` gives all zeros."""
    width = layout.width if input_width is None else input_width
    shapes = {
        "lstm.wx": (width, GATES * hidden),
        "lstm.wh": (hidden, GATES * hidden),
        "lstm.b": (GATES * hidden,),
        "out.w": (layout.n, hidden, layout.n_actions),
        "out.b": (layout.n, layout.n_actions),
    }
    params = ParamStore()
    for name, shape in shapes.items():
        # biases start at zero so the decoded string is driven by the state, not by a fixed offset
        if rng is None or scale == 0 or name.endswith(".b"):
            params.add(name, np.zeros(shape))
        else:
            params.add(name, rng.uniform(-scale, scale, size=shape))
    return params


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def lstm_logits(params: ParamStore, inputs):
    """Per-step action logits for the input sequence; returns (logits, cache)."""
    wx, wh, b = params["lstm.wx"], params["lstm.wh"], params["lstm.b"]
    wo, bo = params["out.w"], params["out.b"]
    inputs = np.asarray(inputs, dtype=np.float64)
    n = inputs.shape[0]
    if inputs.shape[1] != wx.shape[0]:
        raise ConfigError(f"controller expects input width {wx.shape[0]}, got {inputs.shape[1]}")
    if n != wo.shape[0]:
        raise ConfigError(f"controller has {wo.shape[0]} output positions, got {n} steps")
    hidden = wh.shape[0]
    xz = inputs @ wx + b
    hs = np.zeros((n + 1, hidden))
    cs = np.zeros((n + 1, hidden))
    acts = np.zeros((n, GATES * hidden))
    for j in range(n):
        z = xz[j] + hs[j] @ wh
        a = np.empty_like(z)
        a[:3 * hidden] = _sigmoid(z[:3 * hidden])
        a[3 * hidden:] = np.tanh(z[3 * hidden:])
        i, f, o, g = np.split(a, GATES)
        cs[j + 1] = f * cs[j] + i * g
        hs[j + 1] = o * np.tanh(cs[j + 1])
        acts[j] = a
    logits = np.einsum("nh,nha->na", hs[1:], wo) + bo
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite controller activations")
    return logits, (inputs, hs, cs, acts)


def lstm_backward(params: ParamStore, cache, dlogits) -> ParamStore:
    """Backpropagation through time for :func:`lstm_logits`."""
    inputs, hs, cs, acts = cache
    wh, wo = params["lstm.wh"], params["out.w"]
    hidden = wh.shape[0]
    n = inputs.shape[0]
    grads = params.zeros_like()
    grads.values["out.w"] = np.einsum("nh,na->nha", hs[1:], dlogits)
    grads.values["out.b"] = dlogits.copy()
    dh_out = np.einsum("nha,na->nh", wo, dlogits)
    dz_all = np.zeros((n, GATES * hidden))
    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for j in reversed(range(n)):
        i, f, o, g = np.split(acts[j], GATES)
        dh = dh_out[j] + dh_next
        tc = np.tanh(cs[j + 1])
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * cs[j] * f * (1.0 - f),
            dh * tc * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ])
        dz_all[j] = dz
        dh_next = wh @ dz
        dc_next = dc * f
    grads.values["lstm.wx"] = inputs.T @ dz_all
    grads.values["lstm.wh"] = hs[:-1].T @ dz_all
    grads.values["lstm.b"] = dz_all.sum(axis=0)
    return grads


def policy_forward(params: ParamStore, state) -> np.ndarray:
    """Probability rows (n x |alphabet|) for a state string."""
    logits, _ = lstm_logits(params, state)
    return np.exp(log_softmax(logits))


def decode(rows) -> np.ndarray:
    """Most probable action per slot; exact ties go to the lowest alphabet index."""
    return np.argmax(np.asarray(rows), axis=1)


def sample(rows, rng) -> np.ndarray:
    rows = np.asarray(rows)
    u = rng.random(rows.shape[0])[:, None]
    return np.minimum((np.cumsum(rows, axis=1) < u).sum(axis=1), rows.shape[1] - 1)


def log_prob(params: ParamStore, inputs, actions, positions=None) -> float:
    """log P(actions | inputs) as the sum of per-slot log-probabilities."""
    logits, _ = lstm_logits(params, inputs)
    logp = log_softmax(logits)[np.arange(len(actions)), np.asarray(actions)]
    if positions is not None:
        logp = logp[np.asarray(positions, dtype=bool)]
    return float(logp.sum())


def log_prob_grad(params: ParamStore, inputs, actions, weight: float = 1.0, positions=None) -> ParamStore:
    """``weight * grad log P(actions | inputs)``, optionally restricted to ``positions``."""
    logits, cache = lstm_logits(params, inputs)
    probs = np.exp(log_softmax(logits))
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(actions)), np.asarray(actions)] = 1.0
    dlogits = weight * (onehot - probs)
    if positions is not None:
        dlogits[~np.asarray(positions, dtype=bool)] = 0.0
    return lstm_backward(params, cache, dlogits)


# -- standard (per-action) controller --------------------------------------

def init_standard_controller(layout: StateLayout, hidden: int = 64, rng=None, scale: float = 0.1) -> ParamStore:
    return init_controller(layout, hidden, rng, scale, input_width=layout.n_actions)


def standard_inputs(actions, n_actions: int) -> np.ndarray:
    """Teacher-forcing inputs: zero start vector, then one-hot of each previous action."""
    actions = np.asarray(actions, dtype=np.int64)
    inputs = np.zeros((len(actions), n_actions))
    inputs[np.arange(1, len(actions)), actions[:-1]] = 1.0
    return inputs


def standard_forward(params: ParamStore, layout: StateLayout, rng=None):
    """Autoregressive rollout; samples with ``rng``, otherwise greedy.  Returns (actions, rows)."""
    wx, wh, b = params["lstm.wx"], params["lstm.wh"], params["lstm.b"]
    wo, bo = params["out.w"], params["out.b"]
    hidden = wh.shape[0]
    n, n_actions = layout.n, layout.n_actions
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    x = np.zeros(n_actions)
    actions = np.zeros(n, dtype=np.int64)
    rows = np.zeros((n, n_actions))
    for j in range(n):
        z = x @ wx + b + h @ wh
        i, f, o = np.split(_sigmoid(z[:3 * hidden]), 3)
        g = np.tanh(z[3 * hidden:])
        c = f * c + i * g
        h = o * np.tanh(c)
        logit = h @ wo[j] + bo[j]
        row = np.exp(log_softmax(logit))
        rows[j] = row
        actions[j] = sample(row[None, :], rng)[0] if rng is not None else int(np.argmax(row))
        x = np.zeros(n_actions)
        x[actions[j]] = 1.0
    if not np.all(np.isfinite(rows)):
        raise NumericError("non-finite controller activations")
    return actions, rows
