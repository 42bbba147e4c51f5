"""Re-check a finished run directory: weights, records, provenance and exact accuracies."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from cleas import tasknet as tn
from cleas.config import load_config
from cleas.errors import ConfigError, ParseError
from cleas.orchestrator import TaskSource, load_net

REQUIRED = ("config.cfg", "params.bin", "net.json", "summary.json", "iterations.csv")


def audit_run(run_dir) -> list[str]:
    """List every violation found in ``run_dir``; an empty list means the run is intact."""
    run_dir = Path(run_dir)
    missing = [name for name in REQUIRED if not (run_dir / name).exists()]
    if missing:
        return [f"missing {name}" for name in missing]
    violations: list[str] = []
    summary = json.loads((run_dir / "summary.json").read_text())
    digest = hashlib.sha256((run_dir / "params.bin").read_bytes()).hexdigest()
    if digest != summary.get("params_sha256"):
        violations.append("params.bin checksum differs from summary.json")
    try:
        net = load_net(run_dir)
    except (ParseError, KeyError, ValueError) as exc:
        return violations + [f"cannot load stored network: {exc}"]
    try:
        source = TaskSource(load_config(run_dir / "config.cfg"))
    except ConfigError as exc:
        return violations + [f"cannot rebuild datasets: {exc}"]

    violations += _check_store(net)
    violations += _check_provenance(net)
    rows = {r["task"]: r for r in summary.get("tasks", [])}
    for t in sorted(net.records):
        record = net.records[t]
        try:
            arch = net.architecture(t)
        except (KeyError, ValueError, IndexError) as exc:
            violations.append(f"task {t}: cannot rebuild architecture ({exc})")
            continue
        test = source.get(t).test
        acc = tn.evaluate(arch, test.x, test.y)
        if acc != record["test_acc"]:
            violations.append(f"task {t}: re-evaluated accuracy {acc!r} != recorded {record['test_acc']!r}")
        if tn.logits_digest(arch, test.x) != record["test_logits_sha256"]:
            violations.append(f"task {t}: test logits differ from the committed digest")
        if arch.param_count != record["param_count"]:
            violations.append(f"task {t}: parameter count {arch.param_count} != recorded {record['param_count']}")
        arch_file = run_dir / f"arch_task{t}.json"
        if not arch_file.exists() or json.loads(arch_file.read_text()) != record:
            violations.append(f"task {t}: arch_task{t}.json disagrees with net.json")
        row = rows.get(t)
        if row is None or row["test_acc"] != record["test_acc"] or row["params"] != record["param_count"]:
            violations.append(f"task {t}: summary row disagrees with the task record")
    return violations


def _check_store(net: tn.ExpandableNet) -> list[str]:
    out = []
    for name in net.store:
        value, fresh = net.store[name], net.store.masks[name]
        if not np.all(np.isfinite(value)):
            out.append(f"{name}: non-finite stored weights")
        if np.any(value[fresh] != 0.0):
            out.append(f"{name}: weights never committed by any task are non-zero")
    for t in net.records:
        if f"head{t}.w" not in net.store:
            out.append(f"task {t}: output head missing")
    return out


def _check_provenance(net: tn.ExpandableNet) -> list[str]:
    out = []
    spec = net.spec
    slot_task = net.provenance.slot_task
    claimed = [np.zeros(c, dtype=np.int64) for c in spec.capacities]
    for t in sorted(net.records):
        record = net.records[t]
        old_count = new_count = 0
        for i, cap in enumerate(spec.capacities):
            used = np.asarray(record["used_slots"][i], dtype=np.int64)
            new = np.asarray(record["new_slots"][i], dtype=np.int64)
            if used.size and (used.min() < 0 or used.max() >= cap):
                out.append(f"task {t} layer {i}: slot index out of range")
                continue
            if not np.isin(new, used).all():
                out.append(f"task {t} layer {i}: new slots not a subset of used slots")
            old = np.setdiff1d(used, new)
            if np.any(slot_task[i][new] != t):
                out.append(f"task {t} layer {i}: new slots not attributed to task {t}")
            if np.any((slot_task[i][old] < 1) | (slot_task[i][old] >= t)):
                out.append(f"task {t} layer {i}: reused slots were not trained by an earlier task")
            claimed[i][new] = t
            old_count += old.size
            new_count += new.size
        if old_count != record["reused_old"] or new_count != record["new"]:
            out.append(f"task {t}: reused/new counts disagree with the slot lists")
    for i in range(spec.n_layers):
        if not np.array_equal(claimed[i], slot_task[i]):
            out.append(f"layer {i}: provenance does not match the union of committed new slots")
        history = net.provenance.filter_history[i]
        if any(b < a or b > a + 1 for a, b in zip(history, history[1:])):
            out.append(f"layer {i}: filter sizes shrink or jump by more than one")
    return out
