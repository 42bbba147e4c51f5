"""Per-task architecture search and the outer loop over a task sequence.

A run directory holds:

* ``config.cfg``          snapshot that replays the run
* ``iterations.csv``      one row per candidate: task,episode,step,accuracy,new_neurons,reward,baseline
* ``episodes.csv``        exploration draw and best step per episode
* ``arch_task{t}.json``   committed architecture of each task
* ``params.bin``          shared weight store (ParamStore container)
* ``net.json``            hyper-network layout, provenance, filter sizes, task records
* ``summary.json`` / ``summary.csv``
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cleas import cleasc
from cleas import controller as ctl
from cleas import data as D
from cleas import nncore
from cleas import reinforce as rl
from cleas import tasknet as tn
from cleas.config import RunConfig
from cleas.errors import ConfigError, InvariantError, SearchError
from cleas.nncore.params import ParamStore

ITERATION_COLUMNS = ("task", "episode", "step", "accuracy", "new_neurons", "reward", "baseline")
EPISODE_COLUMNS = ("task", "episode", "explore", "best_step", "best_reward")
SUMMARY_COLUMNS = ("task", "test_acc", "params", "reused_old", "new", "seconds")


def _num(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def csv_line(values) -> str:
    return ",".join(_num(v) for v in values) + "\n"


# -- datasets ----------------------------------------------------------------

class TaskSource:
    """Builds the ``TaskDataset`` of each task on demand from one config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._pools = None
        self._prebuilt: list[D.TaskDataset] | None = None
        self.conv = cfg.layer_specs()[0].kind == "conv"
        kind = cfg.dataset
        if kind == "synthetic":
            self._prebuilt = D.synth_tasks(cfg.tasks, cfg.synth_dims, cfg.synth_separation, cfg.seed,
                                           cfg.synth_classes, cfg.train_per_task, cfg.valid_per_task,
                                           cfg.test_per_task)
        elif kind == "synthetic-images":
            self._prebuilt = D.synth_image_tasks(cfg.tasks, cfg.image_side, cfg.seed, cfg.synth_classes,
                                                 cfg.train_per_task, cfg.valid_per_task, cfg.test_per_task)
        elif kind in ("permuted-mnist", "rotated-mnist"):
            train, test = D.load_mnist_dir(_existing_dir(cfg.data_dir))
            self._pools = D.base_splits(train, test, cfg.train_per_task, cfg.valid_per_task,
                                        cfg.test_per_task, cfg.seed)
        elif kind == "class-split-mnist":
            train, test = D.load_mnist_dir(_existing_dir(cfg.data_dir))
            self._prebuilt = self._cap_class_split(D.class_split(train, test, cfg.tasks, cfg.valid_per_task, cfg.seed))
        elif kind == "class-split-cifar":
            train, test = _load_cifar_dir(_existing_dir(cfg.data_dir))
            self._prebuilt = self._cap_class_split(D.class_split(train, test, cfg.tasks, cfg.valid_per_task, cfg.seed))
        else:  # pragma: no cover - RunConfig.validate rejects this
            raise ConfigError(f"unknown dataset {kind!r}")

    def _cap_class_split(self, tasks):
        rng = np.random.default_rng([self.cfg.seed, 0x5CA1E])
        out = []
        for ds in tasks:
            train, test = ds.train, ds.test
            if len(train) > self.cfg.train_per_task:
                (train,) = D.subsample(train, [self.cfg.train_per_task], rng)
            if len(test) > self.cfg.test_per_task:
                (test,) = D.subsample(test, [self.cfg.test_per_task], rng)
            out.append(D.TaskDataset(ds.task, train, ds.valid, test, ds.n_classes, ds.transform))
        return out

    def get(self, task: int) -> D.TaskDataset:
        if not 1 <= task <= self.cfg.tasks:
            raise ConfigError(f"task {task} outside 1..{self.cfg.tasks}")
        if self._prebuilt is not None:
            ds = self._prebuilt[task - 1]
        elif self.cfg.dataset == "permuted-mnist":
            ds = D.permute_task(self._pools, task, self.cfg.seed)
        else:
            ds = D.rotate_task(self._pools, task, self.cfg.tasks)
        return self._shape(ds)

    def _shape(self, ds: D.TaskDataset) -> D.TaskDataset:
        def fix(s: D.LabeledSet) -> D.LabeledSet:
            x = s.x
            if self.conv and x.ndim == 2:
                side = int(round(np.sqrt(x.shape[1])))
                if side * side != x.shape[1]:
                    raise ConfigError("conv layers need square single-channel images")
                x = x.reshape(len(x), 1, side, side)
            elif not self.conv and x.ndim > 2:
                x = x.reshape(len(x), -1)
            return D.LabeledSet(x, s.y)

        return D.TaskDataset(ds.task, fix(ds.train), fix(ds.valid), fix(ds.test), ds.n_classes, ds.transform)


def _existing_dir(path) -> Path:
    path = Path(path)
    if not path.is_dir():
        raise ConfigError(f"dataset directory {path} does not exist")
    return path


def _load_cifar_dir(directory: Path):
    train_files = sorted(directory.glob("data_batch_*.bin"))
    if train_files:
        return (D.load_cifar_batches(train_files),
                D.load_cifar_batches([directory / "test_batch.bin"]))
    if (directory / "train.bin").exists():
        return (D.load_cifar_batches([directory / "train.bin"], label_bytes=2, label_index=1),
                D.load_cifar_batches([directory / "test.bin"], label_bytes=2, label_index=1))
    raise ConfigError(f"no CIFAR binary batches in {directory}")


def make_spec(cfg: RunConfig, dataset: D.TaskDataset) -> tn.HyperNetSpec:
    return tn.HyperNetSpec(dataset.train.x.shape[1:], cfg.layer_specs(), dataset.n_classes, cfg.cap)


# -- per-task search -------------------------------------------------------------

@dataclass
class Candidate:
    episode: int
    step: int
    accuracy: float
    new_neurons: int
    reward: float
    failed: bool


@dataclass
class TaskReport:
    task: int
    record: dict
    seconds: float
    trained: int = 0
    cache_hits: int = 0
    best: Candidate | None = None
    incidents: list[str] = field(default_factory=list)

    def row(self) -> dict:
        return {
            "task": self.task,
            "test_acc": self.record["test_acc"],
            "val_acc": self.record["val_acc"],
            "params": self.record["param_count"],
            "reused_old": self.record["reused_old"],
            "new": self.record["new"],
            "seconds": self.seconds,
            "candidates_trained": self.trained,
            "cache_hits": self.cache_hits,
            "incidents": list(self.incidents),
        }


def action_key(actions) -> int:
    """Stable integer digest of an action string, used to seed its candidate training."""
    raw = np.asarray(actions, dtype=np.int8).tobytes()
    return int.from_bytes(hashlib.sha256(raw).digest()[:8], "little")


def force_reuse(actions, old_mask, four_way: bool) -> np.ndarray:
    """Reuse-all: every previously trained slot is switched to a "use" action."""
    forced = np.asarray(actions, dtype=np.int64).copy()
    if four_way:
        drop_to_use = {cleasc.ONLY_DROP: cleasc.ONLY_USE, cleasc.DROP_AND_EXTEND: cleasc.USE_AND_EXTEND}
        for j in np.flatnonzero(old_mask):
            forced[j] = drop_to_use.get(int(forced[j]), int(forced[j]))
    else:
        forced[old_mask] = tn.USE
    return forced


def train_candidate(net: tn.ExpandableNet, cfg: RunConfig, task: int, actions, ds: D.TaskDataset):
    """Build, train and validate one candidate; deterministic in (seed, task, actions)."""
    rng = cfg.rng("candidate", task, action_key(actions))
    arch = net.build(actions, task, rng, cfg.four_way)
    tn.train_new(arch, ds.train.x, ds.train.y, cfg.epochs, cfg.batch_size, rng, cfg.lr, cfg.optimizer)
    if not arch.failed:
        arch.val_acc = tn.evaluate(arch, ds.valid.x, ds.valid.y)
    return arch


def run_initial(net: tn.ExpandableNet, cfg: RunConfig, ds: D.TaskDataset, log) -> tuple[tn.TaskArchitecture, Candidate]:
    rng = cfg.rng("initial", 1)
    arch = net.build_initial(rng)
    tn.train_new(arch, ds.train.x, ds.train.y, cfg.initial_epochs, cfg.batch_size, rng, cfg.lr,
                 cfg.initial_optimizer)
    if arch.failed:
        raise SearchError("initial network training diverged", {"notes": arch.notes})
    arch.val_acc = tn.evaluate(arch, ds.valid.x, ds.valid.y)
    cand = Candidate(0, 0, arch.val_acc, arch.n_new, rl.reward(arch.val_acc, arch.n_new, cfg.alpha), False)
    log.iteration([1, 0, 0, cand.accuracy, cand.new_neurons, cand.reward, None])
    log.episode([1, 0, 1, 0, cand.reward])
    return arch, cand


def search_task(net: tn.ExpandableNet, cfg: RunConfig, task: int, ds: D.TaskDataset, log,
                report: TaskReport) -> tuple[tn.TaskArchitecture, Candidate]:
    """H episodes of U controller steps; returns the best trained candidate."""
    layout = ctl.StateLayout.for_spec(net.spec, cfg.four_way)
    standard = cfg.mode == "standard-controller"
    init_rng = cfg.rng("controller", task)
    if standard:
        params = ctl.init_standard_controller(layout, cfg.controller_hidden, init_rng, cfg.controller_init_scale)
    else:
        params = ctl.init_controller(layout, cfg.controller_hidden, init_rng, cfg.controller_init_scale)
    opt = nncore.make_optimizer("rmsprop", params, cfg.controller_lr, rho=cfg.controller_rho)
    baseline = rl.Baseline(cfg.baseline_decay)
    explore_rng = cfg.rng("explore", task)
    state_rng = cfg.rng("state", task)
    sample_rng = cfg.rng("sample", task)
    old_mask = net.provenance.flat() > 0
    forced = cfg.mode == "reuse-all"

    cache: dict[bytes, Candidate] = {}
    best: Candidate | None = None
    best_arch = None
    terminal = None
    for h in range(1, cfg.episodes + 1):
        explore = bool(explore_rng.random() < cfg.explore)
        state = ctl.random_state(layout, state_rng) if (explore or h == 1) else terminal
        trace = rl.EpisodeTrace()
        rows_out = []
        episode_best = None
        for u in range(1, cfg.steps + 1):
            positions = None
            if standard:
                actions, _ = ctl.standard_forward(params, layout, sample_rng)
                inputs = ctl.standard_inputs(actions, layout.n_actions)
            else:
                rows = ctl.policy_forward(params, state)
                actions = ctl.sample(rows, sample_rng) if cfg.sample_actions else ctl.decode(rows)
                inputs = state
                if forced:
                    actions = force_reuse(actions, old_mask, cfg.four_way)
                    positions = ~old_mask
            key = np.asarray(actions, dtype=np.int8).tobytes()
            hit = cache.get(key) if cfg.cache_candidates else None
            if hit is not None:
                cand = Candidate(h, u, hit.accuracy, hit.new_neurons, hit.reward, hit.failed)
                report.cache_hits += 1
                arch = None
            else:
                arch = train_candidate(net, cfg, task, actions, ds)
                report.trained += 1
                if arch.failed:
                    report.incidents.append(f"episode {h} step {u}: candidate failed ({'; '.join(arch.notes)})")
                    cand = Candidate(h, u, float("nan"), arch.n_new, rl.FAILED_REWARD, True)
                else:
                    cand = Candidate(h, u, arch.val_acc, arch.n_new, rl.reward(arch.val_acc, arch.n_new, cfg.alpha), False)
                cache[key] = cand
            if not cand.failed and (best is None or cand.reward > best.reward):
                best = cand
                best_arch = arch if arch is not None else best_arch
            if episode_best is None or cand.reward > episode_best.reward:
                episode_best = cand
            trace.steps.append(rl.Step(inputs, np.asarray(actions), cand.reward, positions))
            rows_out.append([task, h, u, cand.accuracy, cand.new_neurons, cand.reward])
            if not standard:
                state = ctl.next_state(actions, layout)
        trace.terminal = state
        terminal = state
        used = rl.update(params, opt, trace, baseline, report.incidents)
        for row in rows_out:
            log.iteration(row + [used])
        log.episode([task, h, explore, episode_best.step, episode_best.reward])
    if best is None:
        raise SearchError(f"task {task}: all {cfg.episodes * cfg.steps} candidates failed",
                          {"task": task, "incidents": report.incidents})
    if best_arch is None or best_arch.actions is None:  # pragma: no cover - guarded by the cache logic
        raise InvariantError("best candidate was not retained")
    return best_arch, best


def check_zero_forgetting(net: tn.ExpandableNet, sources: dict[int, D.LabeledSet]) -> None:
    """Rebuild every committed task from the store and compare its test logits digest."""
    for t, test in sources.items():
        arch = net.architecture(t)
        digest = tn.logits_digest(arch, test.x)
        if digest != net.records[t]["test_logits_sha256"]:
            raise InvariantError(f"task {t}: test logits changed after later commits")
        acc = tn.evaluate(arch, test.x, test.y)
        if acc != net.records[t]["test_acc"]:
            raise InvariantError(f"task {t}: test accuracy {acc} != recorded {net.records[t]['test_acc']}")


# -- run directory -------------------------------------------------------------------

class RunLog:
    def __init__(self, out: Path | None):
        self.out = out
        self.lines: list[str] = []
        self._it = self._ep = None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            self._it = open(out / "iterations.csv", "w", newline="")
            self._ep = open(out / "episodes.csv", "w", newline="")
            self._it.write(",".join(ITERATION_COLUMNS) + "\n")
            self._ep.write(",".join(EPISODE_COLUMNS) + "\n")

    def iteration(self, values) -> None:
        line = csv_line(values)
        self.lines.append(line)
        if self._it is not None:
            self._it.write(line)
            self._it.flush()

    def episode(self, values) -> None:
        if self._ep is not None:
            self._ep.write(csv_line(values))

    def close(self) -> None:
        for f in (self._it, self._ep):
            if f is not None:
                f.close()


def spec_to_json(spec: tn.HyperNetSpec) -> dict:
    return {
        "input_shape": list(spec.input_shape),
        "layers": [{"kind": l.kind, "capacity": l.capacity, "initial_width": l.initial_width, "kernel": l.kernel}
                   for l in spec.layers],
        "n_classes": spec.n_classes,
        "max_new_per_layer": spec.max_new_per_layer,
    }


def spec_from_json(data: dict) -> tn.HyperNetSpec:
    layers = tuple(tn.LayerSpec(**l) for l in data["layers"])
    return tn.HyperNetSpec(tuple(data["input_shape"]), layers, data["n_classes"], data["max_new_per_layer"])


def save_net(net: tn.ExpandableNet, out: Path) -> str:
    """Write params.bin and net.json; returns the sha256 of params.bin."""
    payload = nncore.params.to_bytes(net.store)
    (out / "params.bin").write_bytes(payload)
    state = {
        "spec": spec_to_json(net.spec),
        "provenance": net.provenance.to_json(),
        "kernels": [int(k) for k in net.kernels],
        "records": {str(t): r for t, r in net.records.items()},
    }
    (out / "net.json").write_text(json.dumps(state, indent=2))
    return hashlib.sha256(payload).hexdigest()


def load_net(run_dir) -> tn.ExpandableNet:
    run_dir = Path(run_dir)
    state = json.loads((run_dir / "net.json").read_text())
    net = tn.ExpandableNet(spec_from_json(state["spec"]))
    net.store = nncore.params.load(run_dir / "params.bin")
    net.provenance = tn.Provenance.from_json(state["provenance"])
    net.kernels = list(state["kernels"])
    net.records = {int(t): r for t, r in state["records"].items()}
    return net


@dataclass
class RunResult:
    cfg: RunConfig
    net: tn.ExpandableNet
    reports: list[TaskReport]
    iteration_lines: list[str]
    summary: dict


def run_sequence(cfg: RunConfig, out=None, progress=None) -> RunResult:
    """Learn tasks 1..T in order, checking zero forgetting after every commit."""
    out = Path(out) if out is not None else None
    if cfg.dataset not in ("synthetic", "synthetic-images"):
        cfg = RunConfig(**{**cfg.__dict__, "data_dir": str(Path(cfg.data_dir).resolve())})
    source = TaskSource(cfg)
    first = source.get(1)
    net = tn.ExpandableNet(make_spec(cfg, first))
    log = RunLog(out)
    if out is not None:
        (out / "config.cfg").write_text(cfg.dumps())
    reports: list[TaskReport] = []
    tests: dict[int, D.LabeledSet] = {}
    start_all = time.perf_counter()
    try:
        for t in range(1, cfg.tasks + 1):
            start = time.perf_counter()
            ds = first if t == 1 else source.get(t)
            if ds.n_classes != net.spec.n_classes or ds.train.x.shape[1:] != net.spec.input_shape:
                raise ConfigError(f"task {t} does not match the hyper-network input/head shape")
            report = TaskReport(t, {}, 0.0)
            if t == 1:
                arch, best = run_initial(net, cfg, ds, log)
                report.trained = 1
            else:
                arch, best = search_task(net, cfg, t, ds, log, report)
            arch.test_acc = tn.evaluate(arch, ds.test.x, ds.test.y)
            arch.test_digest = tn.logits_digest(arch, ds.test.x)
            net.commit(arch)
            tests[t] = ds.test
            check_zero_forgetting(net, tests)
            report.record = net.records[t]
            report.best = best
            report.seconds = time.perf_counter() - start
            reports.append(report)
            if out is not None:
                tn.write_description(net.records[t], out / f"arch_task{t}.json")
            if progress is not None:
                progress(report)
    finally:
        log.close()
    rows = [r.row() for r in reports]
    summary = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "tasks": rows,
        "mean_test_acc": float(np.mean([r["test_acc"] for r in rows])),
        "mean_params": float(np.mean([r["params"] for r in rows])),
        "total_seconds": time.perf_counter() - start_all,
    }
    if out is not None:
        summary["params_sha256"] = save_net(net, out)
        (out / "summary.json").write_text(json.dumps(summary, indent=2))
        with open(out / "summary.csv", "w") as f:
            f.write(",".join(SUMMARY_COLUMNS) + "\n")
            for r in rows:
                f.write(csv_line([r[c] for c in SUMMARY_COLUMNS]))
    return RunResult(cfg, net, reports, log.lines, summary)


def store_checksum(store: ParamStore) -> str:
    return hashlib.sha256(nncore.params.to_bytes(store)).hexdigest()
