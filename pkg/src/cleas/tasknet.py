"""Expandable task network over a fixed hyper-network of neuron slots.

Every hidden layer ``i`` owns ``capacity`` slots.  A task architecture picks a
subset of slots per layer.  Slots that some earlier task trained are *old*;
their mutual weights stay frozen.  Every weight touching a *new* slot (and the
task's private output head) is trained.  Committing a task copies exactly those
trainable values back into the shared store, so the weights seen by any earlier
task never change.

Weight storage per connection kind (P producer units, Q consumer units):

* flat -> dense:   (P, Q)
* image -> conv:   (Q, P, k, k)          k grows under filter extension
* conv -> dense:   (P, S, S, Q)          S = widest spatial size; tasks crop [:S_t, :S_t]
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from cleas import cleasc
from cleas import nncore
from cleas.errors import ConfigError, InvariantError, NumericError
from cleas.nncore import functional as F
from cleas.nncore.network import Conv, Dense, Flatten
from cleas.nncore.params import ParamStore

DROP, USE = 0, 1
TWO_WAY = ("drop", "use")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    capacity: int
    initial_width: int
    kernel: int = 0

    def __post_init__(self):
        if self.kind not in ("dense", "conv"):
            raise ConfigError(f"layer kind must be 'dense' or 'conv', got {self.kind!r}")
        if self.capacity < 1:
            raise ConfigError("layer capacity must be positive")
        if not 1 <= self.initial_width <= self.capacity:
            raise ConfigError(f"initial width {self.initial_width} outside [1, {self.capacity}]")
        if self.kind == "conv" and self.kernel < 1:
            raise ConfigError("conv layers need a filter size >= 1")


@dataclass(frozen=True)
class HyperNetSpec:
    """The search space: hidden layers with fixed slot capacities."""

    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...]
    n_classes: int
    max_new_per_layer: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ConfigError("hyper-network needs at least one hidden layer")
        kinds = [layer.kind for layer in self.layers]
        if kinds != sorted(kinds, key=lambda k: k != "conv"):
            raise ConfigError("conv layers must precede dense layers")
        if kinds[0] == "conv":
            if len(self.input_shape) != 3:
                raise ConfigError("conv hyper-networks take (channels, height, width) inputs")
            if self.input_shape[1] != self.input_shape[2]:
                raise ConfigError("only square images are supported")
            size = self.input_shape[1]
            for i, layer in enumerate(self.layers):
                if layer.kind == "conv":
                    if layer.kernel > size:
                        raise ConfigError(f"layer {i}: filter size {layer.kernel} exceeds input size {size}")
                    size = size - layer.kernel + 1
        elif len(self.input_shape) != 1:
            raise ConfigError("dense hyper-networks take flat (features,) inputs")
        if self.n_classes < 2:
            raise ConfigError("need at least two classes")
        if self.max_new_per_layer is not None and self.max_new_per_layer < 0:
            raise ConfigError("max_new_per_layer must be >= 0")

    @property
    def capacities(self) -> tuple[int, ...]:
        return tuple(layer.capacity for layer in self.layers)

    @property
    def n_slots(self) -> int:
        return sum(self.capacities)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def slot_layers(self) -> np.ndarray:
        """Layer index of every slot, in action-string order."""
        return np.repeat(np.arange(self.n_layers), self.capacities)

    def split(self, flat) -> list[np.ndarray]:
        flat = np.asarray(flat)
        bounds = np.cumsum(self.capacities)[:-1]
        return np.split(flat, bounds)

    def spatial_sizes(self, kernels) -> list[int]:
        """Spatial size of each conv layer's *output* for the given filter sizes (0 for dense)."""
        sizes = []
        size = self.input_shape[1] if len(self.input_shape) == 3 else 0
        for layer, k in zip(self.layers, kernels):
            if layer.kind == "conv":
                size = size - k + 1
                sizes.append(size)
            else:
                sizes.append(0)
        return sizes

    def initial_kernels(self) -> list[int]:
        return [layer.kernel if layer.kind == "conv" else 0 for layer in self.layers]


@dataclass
class Provenance:
    """First-training task id per slot (0 = never trained) and filter-size history per layer."""

    slot_task: list[np.ndarray]
    filter_history: list[list[int]]

    @classmethod
    def empty(cls, spec: HyperNetSpec) -> Provenance:
        return cls([np.zeros(c, dtype=np.int64) for c in spec.capacities], [[] for _ in spec.layers])

    def copy(self) -> Provenance:
        return Provenance([a.copy() for a in self.slot_task], [list(h) for h in self.filter_history])

    def flat(self) -> np.ndarray:
        return np.concatenate(self.slot_task)

    def to_json(self) -> dict:
        return {"slot_task": [a.tolist() for a in self.slot_task], "filter_history": self.filter_history}

    @classmethod
    def from_json(cls, data: dict) -> Provenance:
        return cls([np.asarray(a, dtype=np.int64) for a in data["slot_task"]],
                   [list(h) for h in data["filter_history"]])


@dataclass
class TaskArchitecture:
    """One candidate (or committed) sub-network with its compact, masked parameters."""

    task: int
    used: list[np.ndarray]
    old: list[np.ndarray]
    new: list[np.ndarray]
    kernels: list[int]
    extended: list[bool]
    layout: list
    params: ParamStore
    actions: np.ndarray | None = None
    val_acc: float | None = None
    test_acc: float | None = None
    test_digest: str | None = None
    failed: bool = False
    losses: list[float] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    committed: bool = False

    @property
    def used_index(self) -> list[np.ndarray]:
        return [np.flatnonzero(u) for u in self.used]

    @property
    def n_new(self) -> int:
        return int(sum(n.sum() for n in self.new))

    @property
    def n_old(self) -> int:
        return int(sum(o.sum() for o in self.old))

    @property
    def param_count(self) -> int:
        return self.params.size()

    def description(self) -> dict:
        return {
            "task": self.task,
            "used_slots": [np.flatnonzero(u).tolist() for u in self.used],
            "new_slots": [np.flatnonzero(n).tolist() for n in self.new],
            "filter_sizes": [int(k) for k in self.kernels],
            "extended": [bool(e) for e in self.extended],
            "param_count": self.param_count,
            "reused_old": self.n_old,
            "new": self.n_new,
            "val_acc": self.val_acc,
            "test_acc": self.test_acc,
            "test_logits_sha256": self.test_digest,
            "notes": list(self.notes),
        }


def _connection(spec: HyperNetSpec, i: int) -> str:
    """Kind of weight tensor feeding layer ``i`` (``i == n_layers`` is the head)."""
    consumer = "dense" if i == spec.n_layers else spec.layers[i].kind
    if i == 0:
        producer = "conv" if len(spec.input_shape) == 3 else "dense"
    else:
        producer = spec.layers[i - 1].kind
    if consumer == "conv":
        return "conv"
    return "conv_to_dense" if producer == "conv" else "dense"


class ExpandableNet:
    """Shared weight store, provenance and committed per-task records for one task sequence."""

    def __init__(self, spec: HyperNetSpec):
        self.spec = spec
        self.provenance = Provenance.empty(spec)
        self.kernels = spec.initial_kernels()
        self.records: dict[int, dict] = {}
        self.store = ParamStore()
        widest = spec.spatial_sizes(self.kernels)
        # store masks: True = entry never committed by any task
        for i in range(spec.n_layers):
            n_in, n_out = self._n_producer(i), spec.capacities[i]
            kind = _connection(spec, i)
            if kind == "dense":
                shape = (n_in, n_out)
            elif kind == "conv":
                k = spec.layers[i].kernel
                shape = (n_out, n_in, k, k)
            else:
                s = widest[i - 1]
                shape = (n_in, s, s, n_out)
            self.store.add(f"h{i}.w", np.zeros(shape))
            self.store.add(f"h{i}.b", np.zeros(n_out))

    # -- geometry ---------------------------------------------------------
    def _n_producer(self, i: int) -> int:
        if i == 0:
            return self.spec.input_shape[0]
        return self.spec.capacities[i - 1]

    def _widest(self) -> list[int]:
        return self.spec.spatial_sizes(self.spec.initial_kernels())

    def _head_shape(self) -> tuple[int, ...]:
        i = self.spec.n_layers
        if _connection(self.spec, i) == "conv_to_dense":
            s = self._widest()[i - 1]
            return (self.spec.capacities[i - 1], s, s, self.spec.n_classes)
        return (self.spec.capacities[i - 1], self.spec.n_classes)

    # -- action interpretation -------------------------------------------
    def interpret(self, actions, four_way: bool = False):
        """Map an action string to per-layer use masks and extension votes."""
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (self.spec.n_slots,):
            raise ConfigError(f"action string has length {actions.size}, hyper-network has {self.spec.n_slots} slots")
        per_layer = self.spec.split(actions)
        if four_way:
            use = [np.isin(a, cleasc.USE_ACTIONS_4) for a in per_layer]
            votes = [layer.kind == "conv" and cleasc.vote_extend(a) for layer, a in zip(self.spec.layers, per_layer)]
        else:
            use = [a == USE for a in per_layer]
            votes = [False] * self.spec.n_layers
        return use, votes

    def _resolve_kernels(self, votes, notes: list[str]) -> tuple[list[int], list[bool]]:
        kernels = list(self.kernels)
        extended = [False] * self.spec.n_layers
        for i, vote in enumerate(votes):
            if not vote:
                continue
            trial = list(kernels)
            trial[i] += 1
            sizes = self.spec.spatial_sizes(trial)
            inputs = [self.spec.input_shape[1]] + sizes[:-1]
            ok = all(s >= 1 for s, layer in zip(sizes, self.spec.layers) if layer.kind == "conv")
            ok = ok and all(trial[j] <= inputs[j] for j, layer in enumerate(self.spec.layers) if layer.kind == "conv")
            if ok:
                kernels = trial
                extended[i] = True
            else:
                notes.append(f"layer {i}: extension to {trial[i]}x{trial[i]} does not fit; vote ignored")
        return kernels, extended

    # -- building ---------------------------------------------------------
    def build(self, actions, task: int, rng, four_way: bool = False) -> TaskArchitecture:
        """Candidate architecture for ``task`` (>= 2) from an action string."""
        if task < 2:
            raise ConfigError("task 1 uses build_initial")
        if task in self.records:
            raise InvariantError(f"task {task} already committed")
        use, votes = self.interpret(actions, four_way)
        notes: list[str] = []
        cap = self.spec.max_new_per_layer
        for i, u in enumerate(use):
            fresh = u & (self.provenance.slot_task[i] == 0)
            if cap is not None and fresh.sum() > cap:
                demote = np.flatnonzero(fresh)[cap:]
                u[demote] = False
                notes.append(f"layer {i}: {len(demote)} new-slot requests over cap {cap} dropped")
            if not u.any():
                u[0] = True
                notes.append(f"layer {i}: no slot used; slot 0 forced")
        kernels, extended = self._resolve_kernels(votes, notes)
        arch = self._assemble(task, use, kernels, extended, rng)
        arch.actions = np.asarray(actions, dtype=np.int64).copy()
        arch.notes.extend(notes)
        return arch

    def build_initial(self, rng) -> TaskArchitecture:
        """Task-1 network: the first ``initial_width`` slots of every layer, all trainable."""
        if self.records:
            raise InvariantError("build_initial on a network that already holds tasks")
        use = [np.arange(layer.capacity) < layer.initial_width for layer in self.spec.layers]
        return self._assemble(1, use, list(self.kernels), [False] * self.spec.n_layers, rng)

    def _bank(self, i: int, kernels) -> np.ndarray:
        """Global conv weights of layer ``i``, grown to ``kernels[i]`` if needed."""
        w = self.store[f"h{i}.w"]
        while w.shape[-1] < kernels[i]:
            w = cleasc.extend_filter(w)
        return w

    def _assemble(self, task, use, kernels, extended, rng) -> TaskArchitecture:
        spec = self.spec
        old = [u & (p > 0) for u, p in zip(use, self.provenance.slot_task)]
        new = [u & (p == 0) for u, p in zip(use, self.provenance.slot_task)]
        sizes = spec.spatial_sizes(kernels)
        params = ParamStore()
        layout = []
        for i in range(spec.n_layers + 1):
            kind = _connection(spec, i)
            if i == 0:
                p_idx = np.arange(self._n_producer(0))
                p_old = np.ones(p_idx.size, dtype=bool)
            else:
                p_idx = np.flatnonzero(use[i - 1])
                p_old = old[i - 1][p_idx]
            if i == spec.n_layers:
                q_idx = np.arange(spec.n_classes)
                q_old = np.zeros(q_idx.size, dtype=bool)
                name = "head"
                w_global = np.zeros(self._head_shape())
                b_global = np.zeros(spec.n_classes)
            else:
                q_idx = np.flatnonzero(use[i])
                q_old = old[i][q_idx]
                name = f"h{i}"
                w_global = self._bank(i, kernels) if kind == "conv" else self.store[f"{name}.w"]
                b_global = self.store[f"{name}.b"]
            relu = i < spec.n_layers
            if kind == "dense":
                stored = w_global[np.ix_(p_idx, q_idx)]
                frozen = p_old[:, None] & q_old[None, :]
                fan_in, fan_out = p_idx.size, q_idx.size
                keep = np.zeros_like(frozen)
                layout.append(Dense(name, p_idx.size, q_idx.size, relu))
            elif kind == "conv":
                k = kernels[i]
                ar = np.arange(k)
                stored = w_global[np.ix_(q_idx, p_idx, ar, ar)]
                frozen = np.broadcast_to((q_old[:, None] & p_old[None, :])[:, :, None, None], stored.shape).copy()
                keep = np.zeros_like(frozen)
                if extended[i]:
                    # old-old edges keep the neighbour-average init on their new border entries
                    border = cleasc.new_entry_mask(k - 1)
                    keep = frozen & border
                    frozen = frozen & ~border
                fan_in, fan_out = p_idx.size * k * k, q_idx.size * k * k
                layout.append(Conv(name, p_idx.size, q_idx.size, k, relu))
            else:
                s = sizes[i - 1]
                ar = np.arange(s)
                block = w_global[np.ix_(p_idx, ar, ar, q_idx)]
                stored = block.reshape(p_idx.size * s * s, q_idx.size)
                frozen = np.broadcast_to(p_old[:, None, None, None] & q_old[None, None, None, :], block.shape)
                frozen = frozen.reshape(stored.shape).copy()
                keep = np.zeros_like(frozen)
                fan_in, fan_out = p_idx.size * s * s, q_idx.size
                layout.append(Flatten())
                layout.append(Dense(name, p_idx.size * s * s, q_idx.size, relu))
            fresh = F.glorot_uniform(rng, stored.shape, fan_in, fan_out)
            value = np.where(frozen | keep, stored, fresh)
            params.add(f"{name}.w", value, ~frozen)
            b_frozen = q_old
            params.add(f"{name}.b", np.where(b_frozen, b_global[q_idx], 0.0), ~b_frozen)
        return TaskArchitecture(task=task, used=[u.copy() for u in use], old=old, new=new,
                                kernels=list(kernels), extended=list(extended), layout=layout, params=params)

    # -- committing ---------------------------------------------------------
    def commit(self, arch: TaskArchitecture) -> None:
        """Store ``arch`` as the final architecture of its task."""
        t = arch.task
        if t in self.records or arch.committed:
            raise InvariantError(f"task {t} already committed")
        if self.records and t <= max(self.records):
            raise InvariantError(f"task {t} committed out of order")
        if arch.failed:
            raise InvariantError("cannot commit a failed candidate")
        spec = self.spec
        sizes = spec.spatial_sizes(arch.kernels)
        for i in range(spec.n_layers):
            kind = _connection(spec, i)
            if kind == "conv" and arch.kernels[i] != self.store[f"h{i}.w"].shape[-1]:
                grow = arch.kernels[i] - self.store[f"h{i}.w"].shape[-1]
                committed = np.pad(~self.store.masks[f"h{i}.w"], [(0, 0), (0, 0), (0, grow), (0, grow)])
                self.store.values[f"h{i}.w"] = self._bank(i, arch.kernels)
                self.store.masks[f"h{i}.w"] = ~committed
        head_w = np.zeros(self._head_shape())
        head_b = np.zeros(spec.n_classes)
        for i in range(spec.n_layers + 1):
            kind = _connection(spec, i)
            p_idx = np.arange(self._n_producer(0)) if i == 0 else np.flatnonzero(arch.used[i - 1])
            if i == spec.n_layers:
                name, q_idx = "head", np.arange(spec.n_classes)
                w_global, b_global = head_w, head_b
                w_fresh = np.ones(head_w.shape, dtype=bool)
            else:
                name, q_idx = f"h{i}", np.flatnonzero(arch.used[i])
                w_global, b_global = self.store.values[f"{name}.w"], self.store.values[f"{name}.b"]
                w_fresh = self.store.masks[f"{name}.w"]
            wc, mc = arch.params[f"{name}.w"], arch.params.masks[f"{name}.w"]
            if kind == "dense":
                index = np.ix_(p_idx, q_idx)
            elif kind == "conv":
                ar = np.arange(arch.kernels[i])
                index = np.ix_(q_idx, p_idx, ar, ar)
            else:
                s = sizes[i - 1]
                ar = np.arange(s)
                index = np.ix_(p_idx, ar, ar, q_idx)
                wc, mc = wc.reshape(p_idx.size, s, s, q_idx.size), mc.reshape(p_idx.size, s, s, q_idx.size)
            w_global[index] = np.where(mc, wc, w_global[index])
            w_fresh[index] = w_fresh[index] & ~mc
            bc, bm = arch.params[f"{name}.b"], arch.params.masks[f"{name}.b"]
            b_global[q_idx] = np.where(bm, bc, b_global[q_idx])
            if i < spec.n_layers:
                self.store.masks[f"{name}.b"][q_idx] &= ~bm
        self.store.add(f"head{t}.w", head_w, np.zeros(head_w.shape, dtype=bool))
        self.store.add(f"head{t}.b", head_b, np.zeros(head_b.shape, dtype=bool))
        for i in range(spec.n_layers):
            slots = self.provenance.slot_task[i]
            slots[arch.used[i] & (slots == 0)] = t
            if spec.layers[i].kind == "conv":
                self.provenance.filter_history[i].append(int(arch.kernels[i]))
        self.kernels = list(arch.kernels)
        arch.committed = True
        self.records[t] = arch.description()

    # -- committed tasks ----------------------------------------------------
    def architecture(self, task: int) -> TaskArchitecture:
        """Rebuild the committed architecture of ``task`` from the shared store."""
        record = self.records[task]
        spec = self.spec
        use = [np.isin(np.arange(c), idx) for c, idx in zip(spec.capacities, record["used_slots"])]
        new = [np.isin(np.arange(c), idx) for c, idx in zip(spec.capacities, record["new_slots"])]
        old = [u & ~n for u, n in zip(use, new)]
        kernels = list(record["filter_sizes"])
        sizes = spec.spatial_sizes(kernels)
        params = ParamStore()
        layout = []
        for i in range(spec.n_layers + 1):
            kind = _connection(spec, i)
            p_idx = np.arange(self._n_producer(0)) if i == 0 else np.flatnonzero(use[i - 1])
            relu = i < spec.n_layers
            if i == spec.n_layers:
                name, q_idx = "head", np.arange(spec.n_classes)
                w_global, b_global = self.store[f"head{task}.w"], self.store[f"head{task}.b"]
            else:
                name, q_idx = f"h{i}", np.flatnonzero(use[i])
                w_global, b_global = self.store[f"{name}.w"], self.store[f"{name}.b"]
            if kind == "dense":
                w = w_global[np.ix_(p_idx, q_idx)]
                layout.append(Dense(name, p_idx.size, q_idx.size, relu))
            elif kind == "conv":
                ar = np.arange(kernels[i])
                w = w_global[np.ix_(q_idx, p_idx, ar, ar)]
                layout.append(Conv(name, p_idx.size, q_idx.size, kernels[i], relu))
            else:
                s = sizes[i - 1]
                ar = np.arange(s)
                w = w_global[np.ix_(p_idx, ar, ar, q_idx)].reshape(p_idx.size * s * s, q_idx.size)
                layout.append(Flatten())
                layout.append(Dense(name, p_idx.size * s * s, q_idx.size, relu))
            params.add(f"{name}.w", w, False)
            params.add(f"{name}.b", b_global[q_idx], False)
        arch = TaskArchitecture(task=task, used=use, old=old, new=new, kernels=kernels,
                                extended=list(record["extended"]), layout=layout, params=params,
                                val_acc=record["val_acc"], test_acc=record["test_acc"],
                                test_digest=record["test_logits_sha256"], committed=True)
        return arch

    def masked_forward(self, arch: TaskArchitecture, x):
        """Forward pass through the full-width hyper-network with unused slots silenced.

        Independent of the compact path in ``arch.layout``; used to check that
        compaction changes nothing.
        """
        spec = self.spec
        sizes = spec.spatial_sizes(arch.kernels)
        h = np.asarray(x, dtype=np.float64)
        for i in range(spec.n_layers + 1):
            kind = _connection(spec, i)
            p_idx = np.arange(self._n_producer(0)) if i == 0 else np.flatnonzero(arch.used[i - 1])
            if i == spec.n_layers:
                name, q_idx = "head", np.arange(spec.n_classes)
                w_full, b_full = np.zeros(self._head_shape()), np.zeros(spec.n_classes)
            else:
                name, q_idx = f"h{i}", np.flatnonzero(arch.used[i])
                w_full = self._bank(i, arch.kernels) if kind == "conv" else self.store[f"{name}.w"].copy()
                b_full = self.store[f"{name}.b"].copy()
            wc = arch.params[f"{name}.w"]
            b_full[q_idx] = arch.params[f"{name}.b"]
            if kind == "dense":
                w_full[np.ix_(p_idx, q_idx)] = wc
                z = h @ w_full + b_full
            elif kind == "conv":
                k = arch.kernels[i]
                ar = np.arange(k)
                w_full = w_full[:, :, :k, :k].copy()
                w_full[np.ix_(q_idx, p_idx, ar, ar)] = wc
                z = F.conv2d_forward(h, w_full, b_full)
            else:
                s = sizes[i - 1]
                ar = np.arange(s)
                w_full = w_full[:, :s, :s, :].copy()
                w_full[np.ix_(p_idx, ar, ar, q_idx)] = wc.reshape(p_idx.size, s, s, q_idx.size)
                z = h.reshape(h.shape[0], -1) @ w_full.reshape(-1, w_full.shape[-1]) + b_full
            if i == spec.n_layers:
                return z
            mask = arch.used[i].astype(np.float64)
            h = F.relu(z) * (mask[None, :, None, None] if kind == "conv" else mask[None, :])
        raise AssertionError("unreachable")


def train_new(arch: TaskArchitecture, x, y, epochs: int, batch_size: int, rng,
              lr: float = 1e-3, optimizer: str = "adam") -> TaskArchitecture:
    """Optimize the trainable (new) weights of ``arch`` on (x, y) in place."""
    if arch.committed:
        raise InvariantError("cannot train a committed architecture")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    opt = nncore.make_optimizer(optimizer, arch.params, lr)
    n = len(y)
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, batch_size)):
            idx = order[start:start + batch_size]
            try:
                loss, grads = nncore.loss_and_grad(arch.params, arch.layout, x[idx], y[idx], batch_index=b)
            except NumericError as exc:
                arch.failed = True
                arch.notes.append(str(exc))
                return arch
            nncore.step(opt, arch.params, grads)
            total += loss * len(idx)
        arch.losses.append(total / n)
    return arch


def logits(arch: TaskArchitecture, x) -> np.ndarray:
    return nncore.predict(arch.params, arch.layout, np.asarray(x, dtype=np.float64))


def evaluate(arch: TaskArchitecture, x, y) -> float:
    """Fraction of samples whose argmax logit equals the label."""
    y = np.asarray(y)
    if len(y) == 0:
        raise ConfigError("cannot evaluate on an empty dataset")
    return float(np.mean(np.argmax(logits(arch, x), axis=1) == y))


def logits_digest(arch: TaskArchitecture, x) -> str:
    return hashlib.sha256(np.ascontiguousarray(logits(arch, x)).tobytes()).hexdigest()


def write_description(arch_or_record, path) -> None:
    record = arch_or_record.description() if isinstance(arch_or_record, TaskArchitecture) else arch_or_record
    with open(path, "w") as f:
        json.dump(record, f, indent=2)
