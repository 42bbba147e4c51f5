from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from cleas.config import RunConfig

ROOT = Path(__file__).resolve().parents[1]
MNIST_DIR = ROOT / "data" / "mnist"


def numeric_grad(f, x: np.ndarray, idx, eps: float = 1e-6) -> float:
    """Central difference of scalar ``f()`` w.r.t. ``x[idx]`` (x modified in place and restored)."""
    old = x[idx]
    x[idx] = old + eps
    up = f()
    x[idx] = old - eps
    down = f()
    x[idx] = old
    return (up - down) / (2 * eps)


def rel_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a) + abs(b), 1e-8)


def tiny_config(**changes) -> RunConfig:
    """Two-layer, six-slot hyper-network on Gaussian blobs; runs in well under a second per task."""
    base = dict(dataset="synthetic", tasks=2, architecture="dense:3:2,dense:3:2", episodes=4, steps=1,
                train_per_task=200, valid_per_task=200, test_per_task=200, epochs=10, initial_epochs=20,
                batch_size=32, lr=1e-2, alpha=0.01, synth_dims=10, synth_separation=2.0, seed=0)
    base.update(changes)
    return RunConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
