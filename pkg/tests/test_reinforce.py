from __future__ import annotations

import itertools

import numpy as np
import pytest

from cleas import controller as ctl
from cleas import nncore
from cleas import reinforce as rl
from cleas.cleasc import FOUR_WAY

from conftest import numeric_grad, rel_error


def test_reward_examples():
    assert rl.reward(0.95, 0, 0.5) == 0.95
    assert rl.reward(0.95, 30, 1e-3) == pytest.approx(0.92, abs=1e-15)
    assert rl.RewardRecord(0.9, 10, 0.01).value == pytest.approx(0.8)
    assert rl.RewardRecord(0.9, 10, 0.01, failed=True).value == rl.FAILED_REWARD


def test_reward_strictly_decreasing_in_new_neurons():
    values = [rl.reward(0.9, c, 1e-3) for c in range(50)]
    assert all(b < a for a, b in zip(values, values[1:]))


def _setup(seed=0, n=3, four_way=False):
    rng = np.random.default_rng(seed)
    lay = ctl.StateLayout(tuple(range(n)) if n <= 2 else (0,) * (n - 1) + (1,), max(2, min(n, 2)),
                          FOUR_WAY if four_way else ("drop", "use"))
    params = ctl.init_controller(lay, hidden=8, rng=rng, scale=0.5)
    return rng, lay, params


def test_zero_advantage_leaves_params_unchanged():
    rng, lay, params = _setup()
    before = nncore.to_bytes(params)
    opt = nncore.make_optimizer("rmsprop", params, 1e-2, rho=0.9)
    state = ctl.random_state(lay, rng)
    trace = rl.EpisodeTrace([rl.Step(state, np.array([1, 0, 1]), 0.7), rl.Step(state, np.array([0, 0, 1]), 0.7)])
    used = rl.update(params, opt, trace, rl.Baseline(0.9, 0.7))
    assert used == 0.7
    assert nncore.to_bytes(params) == before


def test_first_episode_initialises_baseline():
    rng, lay, params = _setup()
    opt = nncore.make_optimizer("rmsprop", params, 1e-2)
    state = ctl.random_state(lay, rng)
    base = rl.Baseline(0.9)
    trace = rl.EpisodeTrace([rl.Step(state, np.array([1, 0, 1]), 0.4), rl.Step(state, np.array([0, 0, 1]), 0.8)])
    used = rl.update(params, opt, trace, base)
    assert used == pytest.approx(0.6)
    assert base.value == pytest.approx(0.6)
    rl.update(params, opt, rl.EpisodeTrace([rl.Step(state, np.array([1, 1, 1]), 1.0)]), base)
    assert base.value == pytest.approx(0.9 * 0.6 + 0.1 * 1.0)


def test_policy_gradient_matches_finite_differences():
    rng, lay, params = _setup(seed=3)
    steps = []
    for r in (0.9, 0.2, 0.55):
        steps.append(rl.Step(ctl.random_state(lay, rng), rng.integers(0, 2, lay.n), r))
    trace = rl.EpisodeTrace(steps)
    b = 0.5
    grad = rl.policy_gradient(params, trace, b)

    def objective():
        return sum((s.reward - b) * ctl.log_prob(params, s.inputs, s.actions) for s in steps)

    for name in params:
        for _ in range(20):
            idx = tuple(rng.integers(d) for d in params[name].shape)
            assert rel_error(grad[name][idx], numeric_grad(objective, params.values[name], idx)) < 1e-4


@pytest.mark.parametrize("n,four_way", [(1, False), (2, False), (3, False), (2, True), (3, True)])
def test_expected_score_is_zero(n, four_way):
    rng, lay, params = _setup(seed=n, n=n, four_way=four_way)
    state = ctl.random_state(lay, rng)
    total = params.zeros_like()
    for actions in itertools.product(range(lay.n_actions), repeat=n):
        prob = np.exp(ctl.log_prob(params, state, np.array(actions)))
        g = ctl.log_prob_grad(params, state, np.array(actions), weight=prob)
        for name in total:
            total.values[name] += g[name]
    for name in total:
        assert np.max(np.abs(total[name])) < 1e-8


def run_bandit(seed: int, updates: int = 200, lr: float = 1e-3) -> float:
    """n = 1, two actions, reward 1 for "use" and 0 for "drop"; returns the final P(use)."""
    rng = np.random.default_rng(seed)
    lay = ctl.StateLayout((0,), 1)
    params = ctl.init_controller(lay, 64, rng, 0.1)
    opt = nncore.make_optimizer("rmsprop", params, lr, rho=0.9)
    base = rl.Baseline(0.9)
    state = ctl.next_state(np.array([0]), lay)
    for _ in range(updates):
        a = ctl.sample(ctl.policy_forward(params, state), rng)
        rl.update(params, opt, rl.EpisodeTrace([rl.Step(state, a, float(a[0] == 1))]), base)
    return float(ctl.policy_forward(params, state)[0, 1])


def test_bandit_single_seed_learns():
    assert run_bandit(0) > 0.9


def test_baseline_stays_within_observed_rewards():
    rng, lay, params = _setup(seed=9)
    opt = nncore.make_optimizer("rmsprop", params, 1e-2)
    base = rl.Baseline(0.9)
    seen = []
    for _ in range(30):
        r = float(rng.uniform(-1, 1))
        seen.append(r)
        rl.update(params, opt, rl.EpisodeTrace([rl.Step(ctl.random_state(lay, rng), rng.integers(0, 2, lay.n), r)]), base)
        assert min(seen) - 1e-12 <= base.value <= max(seen) + 1e-12


def test_non_finite_gradient_is_skipped():
    rng, lay, params = _setup()
    params.values["out.w"][0, 0, 0] = np.inf
    before = nncore.to_bytes(params)
    incidents = []
    trace = rl.EpisodeTrace([rl.Step(ctl.random_state(lay, rng), np.array([1, 0, 1]), 0.3)])
    rl.update(params, nncore.make_optimizer("rmsprop", params, 1e-2), trace, rl.Baseline(0.9, 0.0), incidents)
    assert nncore.to_bytes(params) == before
    assert incidents


def test_empty_episode_rejected():
    _, _, params = _setup()
    with pytest.raises(ValueError):
        rl.update(params, nncore.make_optimizer("rmsprop", params, 1e-2), rl.EpisodeTrace(), rl.Baseline())
