"""REINFORCE for the controller: reward, moving-average baseline, episode update."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cleas import controller as ctl
from cleas import nncore
from cleas.errors import ConfigError, NumericError
from cleas.nncore.params import ParamStore

FAILED_REWARD = -1.0


def reward(accuracy: float, new_neurons: int, alpha: float) -> float:
    """Validation accuracy minus ``alpha`` per newly added neuron."""
    return accuracy - alpha * new_neurons


@dataclass
class RewardRecord:
    accuracy: float
    new_neurons: int
    alpha: float
    failed: bool = False

    @property
    def value(self) -> float:
        return FAILED_REWARD if self.failed else reward(self.accuracy, self.new_neurons, self.alpha)


@dataclass
class Step:
    inputs: np.ndarray  # controller input sequence (state string, or teacher-forcing inputs)
    actions: np.ndarray
    reward: float
    positions: np.ndarray | None = None  # slots the policy actually decided


@dataclass
class EpisodeTrace:
    steps: list[Step] = field(default_factory=list)
    terminal: np.ndarray | None = None

    @property
    def rewards(self) -> np.ndarray:
        return np.array([s.reward for s in self.steps])


@dataclass
class Baseline:
    """Exponential moving average of episode rewards; unset until the first episode."""

    decay: float = 0.9
    value: float | None = None


def policy_gradient(params: ParamStore, trace: EpisodeTrace, baseline: float) -> ParamStore:
    """sum_u (R_u - b) * grad log pi(a_u | s_u)  (ascent direction)."""
    total = params.zeros_like()
    for st in trace.steps:
        advantage = st.reward - baseline
        if advantage == 0.0:
            continue
        g = ctl.log_prob_grad(params, st.inputs, st.actions, advantage, st.positions)
        for name in total:
            total.values[name] += g[name]
    return total


def update(params: ParamStore, opt, trace: EpisodeTrace, baseline: Baseline, incidents: list | None = None):
    """One REINFORCE step on ``params`` (in place) followed by the baseline update.

    Returns the baseline value used for the advantage.
    """
    if not trace.steps:
        raise ConfigError("empty episode")
    rewards = trace.rewards
    if baseline.value is None:
        baseline.value = float(rewards.mean())
    used = baseline.value
    try:
        grad = policy_gradient(params, trace, used)
        finite = all(np.all(np.isfinite(v)) for v in grad.values.values())
    except NumericError:
        finite = False
    if finite:
        for name in grad:
            grad.values[name] = -grad.values[name]
        nncore.step(opt, params, grad)
    elif incidents is not None:
        incidents.append("non-finite policy gradient; update skipped")
    baseline.value = baseline.decay * baseline.value + (1.0 - baseline.decay) * float(rewards.mean())
    return used
