"""Filter-size growth for convolutional task networks.

Four-way actions carry an extra "extend" bit; a conv layer grows its filters
by one when a strict majority of its slots vote to extend.  Grown filters keep
their trained k x k block bit-exact in the top-left corner; the new bottom row
and right column start at the mean of their old-block 8-neighbours.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from cleas.errors import ConfigError

ONLY_USE, USE_AND_EXTEND, ONLY_DROP, DROP_AND_EXTEND = range(4)
FOUR_WAY = ("only-use", "use-and-extend", "only-drop", "drop-and-extend")
EXTEND_ACTIONS = (USE_AND_EXTEND, DROP_AND_EXTEND)
USE_ACTIONS_4 = (ONLY_USE, USE_AND_EXTEND)


def is_use(action: int) -> bool:
    return action in USE_ACTIONS_4


def is_extend(action: int) -> bool:
    return action in EXTEND_ACTIONS


def vote_extend(layer_actions) -> bool:
    """True iff strictly more than half of the layer's slots ask to extend."""
    actions = np.asarray(layer_actions)
    if actions.size == 0:
        raise ConfigError("vote over an empty layer")
    votes = int(np.isin(actions, EXTEND_ACTIONS).sum())
    return 2 * votes > actions.size


def new_entry_mask(k: int) -> np.ndarray:
    """Boolean (k+1, k+1) mask of the entries created by one extension."""
    mask = np.ones((k + 1, k + 1), dtype=bool)
    mask[:k, :k] = False
    return mask


def extend_filter(old) -> np.ndarray:
    """Grow the trailing (k, k) axes of ``old`` to (k+1, k+1).

    Leading axes (output/input channels) are carried through unchanged.
    """
    old = np.asarray(old, dtype=np.float64)
    k = old.shape[-1]
    if k < 1 or old.shape[-2] != k:
        raise ConfigError(f"cannot extend a filter of shape {old.shape[-2:]}")
    out = np.zeros(old.shape[:-2] + (k + 1, k + 1))
    out[..., :k, :k] = old
    for r, c in zip(*np.nonzero(new_entry_mask(k))):
        rows = range(max(r - 1, 0), min(r + 2, k))
        cols = range(max(c - 1, 0), min(c + 2, k))
        neighbours = [(i, j) for i in rows for j in cols]
        if neighbours:
            out[..., r, c] = np.mean([old[..., i, j] for i, j in neighbours], axis=0)
        else:
            out[..., r, c] = old.mean(axis=(-2, -1))
    return out


@dataclass
class FilterBank:
    """All filters of one conv layer; every filter shares the same size."""

    weights: np.ndarray  # (out_channels, in_channels, k, k)
    filter_task: np.ndarray  # first-training task id per filter, 0 = never
    input_size: int  # spatial size of the layer input
    notes: list[str] = field(default_factory=list)

    @property
    def kernel(self) -> int:
        return self.weights.shape[-1]

    @property
    def output_size(self) -> int:
        return self.input_size - self.kernel + 1


def extend_layer(bank: FilterBank) -> FilterBank:
    """Extend every filter in ``bank`` by one; a no-op (with warning) if the filter would outgrow its input."""
    if bank.kernel + 1 > bank.input_size:
        message = f"filter size {bank.kernel} already at input size {bank.input_size}; extension ignored"
        warnings.warn(message, RuntimeWarning, stacklevel=2)
        return FilterBank(bank.weights.copy(), bank.filter_task.copy(), bank.input_size, bank.notes + [message])
    return FilterBank(extend_filter(bank.weights), bank.filter_task.copy(), bank.input_size, list(bank.notes))
