"""Dataset ingestion and continual-task construction."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from cleas.errors import ConfigError, ParseError

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801


@dataclass
class LabeledSet:
    x: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    def take(self, idx) -> LabeledSet:
        return LabeledSet(self.x[idx], self.y[idx])


@dataclass
class TaskDataset:
    task: int
    train: LabeledSet
    valid: LabeledSet
    test: LabeledSet
    n_classes: int
    transform: dict = field(default_factory=dict)


# -- IDX ---------------------------------------------------------------------

def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def parse_idx(raw: bytes, expect: int | None = None) -> np.ndarray:
    """Decode an unsigned-byte IDX payload into an ndarray of uint8."""
    if len(raw) < 4:
        raise ParseError("missing magic number", 0)
    (magic,) = struct.unpack(">I", raw[:4])
    if magic >> 8 != 0x08:
        raise ParseError(f"bad magic 0x{magic:08x} (expected unsigned-byte IDX)", 0)
    if expect is not None and magic != expect:
        raise ParseError(f"bad magic 0x{magic:08x}, expected 0x{expect:08x}", 0)
    rank = magic & 0xFF
    if rank == 0:
        raise ParseError("IDX rank 0", 3)
    header_end = 4 + 4 * rank
    if len(raw) < header_end:
        raise ParseError("truncated dimension header", len(raw))
    dims = struct.unpack(f">{rank}I", raw[4:header_end])
    count = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header_end < count:
        raise ParseError(f"truncated payload: need {count} bytes, have {len(raw) - header_end}", len(raw))
    if len(raw) - header_end > count:
        raise ParseError("trailing bytes after payload", header_end + count)
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header_end).reshape(dims)


def load_idx(path, expect: int | None = None) -> np.ndarray:
    """Read a (optionally gzip-compressed) IDX file."""
    return parse_idx(_read_bytes(path), expect)


def load_mnist_pair(images_path, labels_path) -> LabeledSet:
    """Images flattened to features in [0, 1] plus integer labels."""
    images = load_idx(images_path, IDX_IMAGES)
    labels = load_idx(labels_path, IDX_LABELS)
    if len(images) != len(labels):
        raise ConfigError(f"{len(images)} images but {len(labels)} labels")
    x = images.reshape(len(images), -1).astype(np.float64) / 255.0
    return LabeledSet(x, labels.astype(np.int64))


def load_mnist_dir(directory) -> tuple[LabeledSet, LabeledSet]:
    """(train pool, test pool) from the standard four MNIST file names, gzipped or not."""
    directory = Path(directory)

    def find(stem):
        for name in (stem + ".gz", stem):
            if (directory / name).exists():
                return directory / name
        raise ConfigError(f"missing {stem}[.gz] in {directory}")

    train = load_mnist_pair(find("train-images-idx3-ubyte"), find("train-labels-idx1-ubyte"))
    test = load_mnist_pair(find("t10k-images-idx3-ubyte"), find("t10k-labels-idx1-ubyte"))
    return train, test


def load_cifar_batches(paths, label_bytes: int = 1, label_index: int | None = None) -> LabeledSet:
    """CIFAR binary batches: rows of label byte(s) then 3072 RGB bytes (channel-major 32x32).

    CIFAR-100 rows carry two label bytes (coarse, fine); pass ``label_bytes=2``
    and ``label_index=1`` for the fine labels.
    """
    row = label_bytes + 3072
    label_index = label_bytes - 1 if label_index is None else label_index
    xs, ys = [], []
    for path in paths:
        raw = _read_bytes(path)
        if len(raw) % row:
            raise ParseError(f"file size {len(raw)} is not a multiple of the {row}-byte row", len(raw) - len(raw) % row)
        table = np.frombuffer(raw, dtype=np.uint8).reshape(-1, row)
        ys.append(table[:, label_index].astype(np.int64))
        xs.append(table[:, label_bytes:].reshape(-1, 3, 32, 32).astype(np.float64) / 255.0)
    return LabeledSet(np.concatenate(xs), np.concatenate(ys))


# -- splitting ---------------------------------------------------------------

def stratified_split(y, n_first: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into (first, rest) with every class present in ``first`` when possible."""
    y = np.asarray(y)
    if n_first > len(y):
        raise ConfigError(f"cannot draw {n_first} samples from {len(y)}")
    classes = np.unique(y)
    order = rng.permutation(len(y))
    if n_first < len(classes):
        return np.sort(order[:n_first]), np.sort(order[n_first:])
    counts = np.array([(y == c).sum() for c in classes])
    quota = np.maximum(np.floor(counts * n_first / len(y)).astype(int), 1)
    quota = np.minimum(quota, counts)
    while quota.sum() < n_first:
        gap = counts * n_first / len(y) - quota
        gap[quota >= counts] = -np.inf
        quota[int(np.argmax(gap))] += 1
    while quota.sum() > n_first:
        surplus = quota - counts * n_first / len(y)
        surplus[quota <= 1] = -np.inf
        quota[int(np.argmax(surplus))] -= 1
    first = []
    for c, q in zip(classes, quota):
        members = order[y[order] == c]
        first.append(members[:q])
    first = np.sort(np.concatenate(first))
    rest = np.setdiff1d(np.arange(len(y)), first)
    return first, rest


def subsample(pool: LabeledSet, sizes, rng) -> list[LabeledSet]:
    """Disjoint stratified draws of the given sizes from ``pool``."""
    remaining = np.arange(len(pool))
    out = []
    for size in sizes:
        first, rest = stratified_split(pool.y[remaining], size, rng)
        out.append(pool.take(remaining[first]))
        remaining = remaining[rest]
    return out


def base_splits(train_pool: LabeledSet, test_pool: LabeledSet, n_train: int, n_valid: int,
                n_test: int, seed: int) -> tuple[LabeledSet, LabeledSet, LabeledSet]:
    """Shared (train, valid, test) base samples; validation comes out of the training pool."""
    rng = np.random.default_rng([seed, 0xDA7A])
    valid, train = subsample(train_pool, [n_valid, n_train], rng)
    (test,) = subsample(test_pool, [n_test], rng)
    return train, valid, test


# -- task transforms -----------------------------------------------------------

def task_permutation(n_features: int, task: int, master_seed: int) -> np.ndarray:
    """Identity for task 1, otherwise a permutation fixed by (master_seed, task)."""
    if task == 1:
        return np.arange(n_features)
    return np.random.default_rng([master_seed, task]).permutation(n_features)


def permute_task(splits, task: int, master_seed: int, n_classes: int = 10) -> TaskDataset:
    """Apply the task's pixel permutation to every image of the three splits."""
    train, valid, test = splits
    perm = task_permutation(train.x.shape[1], task, master_seed)
    parts = [LabeledSet(s.x[:, perm], s.y) for s in (train, valid, test)]
    return TaskDataset(task, *parts, n_classes=n_classes,
                       transform={"kind": "permute", "master_seed": master_seed, "task": task})


def rotate_image(image, degrees: float, order: int = 1) -> np.ndarray:
    """Rotate the trailing (h, w) axes counter-clockwise about the centre; zero fill outside.

    ``order=1`` is bilinear, ``order=0`` nearest neighbour.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[-2:]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = np.deg2rad(degrees)
    cos, sin = np.cos(theta), np.sin(theta)
    # snap to exact values at multiples of 90 degrees
    cos = 0.0 if abs(cos) < 1e-12 else cos
    sin = 0.0 if abs(sin) < 1e-12 else sin
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dy, dx = yy - cy, xx - cx
    # inverse map from output pixel to source position (rows grow downwards)
    src_x = cos * dx - sin * dy + cx
    src_y = sin * dx + cos * dy + cy
    out = np.zeros_like(image)
    if order == 0:
        sx, sy = np.rint(src_x).astype(int), np.rint(src_y).astype(int)
        inside = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
        out[..., inside] = image[..., sy[inside], sx[inside]]
        return out
    x0, y0 = np.floor(src_x).astype(int), np.floor(src_y).astype(int)
    fx, fy = src_x - x0, src_y - y0
    for oy, ox, weight in ((0, 0, (1 - fy) * (1 - fx)), (0, 1, (1 - fy) * fx),
                           (1, 0, fy * (1 - fx)), (1, 1, fy * fx)):
        px, py = x0 + ox, y0 + oy
        inside = (px >= 0) & (px < w) & (py >= 0) & (py < h) & (weight != 0)
        out[..., inside] += weight[inside] * image[..., py[inside], px[inside]]
    return out


def rotation_angle(task: int, n_tasks: int) -> float:
    return 0.0 if n_tasks == 1 else (task - 1) * 180.0 / (n_tasks - 1)


def rotate_task(splits, task: int, n_tasks: int, side: int = 28, n_classes: int = 10,
                order: int = 1) -> TaskDataset:
    """Rotate every image by (task-1) * 180 / (n_tasks-1) degrees."""
    angle = rotation_angle(task, n_tasks)
    parts = []
    for s in splits:
        rotated = rotate_image(s.x.reshape(-1, side, side), angle, order)
        parts.append(LabeledSet(rotated.reshape(len(s), -1), s.y))
    return TaskDataset(task, *parts, n_classes=n_classes, transform={"kind": "rotate", "degrees": angle})


def class_split(train_pool: LabeledSet, test_pool: LabeledSet, n_tasks: int, n_valid: int, seed: int,
                n_classes: int | None = None) -> list[TaskDataset]:
    """Disjoint class blocks per task with labels remapped to [0, C/T)."""
    n_classes = int(max(train_pool.y.max(), test_pool.y.max()) + 1) if n_classes is None else n_classes
    if n_classes % n_tasks:
        raise ConfigError(f"{n_classes} classes do not split evenly into {n_tasks} tasks")
    per_task = n_classes // n_tasks
    rng = np.random.default_rng([seed, 0xC1A55])
    tasks = []
    for t in range(1, n_tasks + 1):
        lo, hi = (t - 1) * per_task, t * per_task
        tr = np.flatnonzero((train_pool.y >= lo) & (train_pool.y < hi))
        te = np.flatnonzero((test_pool.y >= lo) & (test_pool.y < hi))
        pool = LabeledSet(train_pool.x[tr], train_pool.y[tr] - lo)
        valid_idx, train_idx = stratified_split(pool.y, min(n_valid, len(pool) - 1), rng)
        test = LabeledSet(test_pool.x[te], test_pool.y[te] - lo)
        tasks.append(TaskDataset(t, pool.take(train_idx), pool.take(valid_idx), test, per_task,
                                 transform={"kind": "classes", "classes": [lo, hi]}))
    return tasks


# -- synthetic -----------------------------------------------------------------

def bayes_accuracy(separation: float, n_classes: int = 2) -> float:
    """Exact Bayes accuracy for two classes; a union lower bound for more."""
    pairwise_error = 1.0 - float(ndtr(separation / 2.0))
    if n_classes == 2:
        return 1.0 - pairwise_error
    return max(0.0, 1.0 - (n_classes - 1) * pairwise_error)


def _blobs(rng, means, n, n_classes):
    y = np.arange(n) % n_classes
    y = y[rng.permutation(n)]
    x = means[y] + rng.standard_normal((n, means.shape[1]))
    return LabeledSet(x, y.astype(np.int64))


def synth_tasks(n_tasks: int, dims: int, separation: float, seed: int, n_classes: int = 2,
                n_train: int = 400, n_valid: int = 200, n_test: int = 200) -> list[TaskDataset]:
    """Unit-variance Gaussian blobs with pairwise mean distance ``separation``.

    Class means sit on ``separation / sqrt(2)`` times orthonormal directions drawn
    per task, so two-class Bayes accuracy is Phi(separation / 2).
    """
    if separation <= 0:
        raise ConfigError("separation must be positive")
    if n_classes > dims:
        raise ConfigError("need dims >= n_classes")
    tasks = []
    for t in range(1, n_tasks + 1):
        rng = np.random.default_rng([seed, t])
        basis, _ = np.linalg.qr(rng.standard_normal((dims, dims)))
        means = separation / np.sqrt(2.0) * basis[:, :n_classes].T
        parts = [_blobs(rng, means, n, n_classes) for n in (n_train, n_valid, n_test)]
        tasks.append(TaskDataset(t, *parts, n_classes=n_classes,
                                 transform={"kind": "synthetic", "seed": seed, "separation": separation}))
    return tasks


def synth_image_tasks(n_tasks: int, side: int, seed: int, n_classes: int = 2, n_train: int = 200,
                      n_valid: int = 100, n_test: int = 100, noise: float = 0.5) -> list[TaskDataset]:
    """Small single-channel images: per-task class templates plus Gaussian noise."""
    tasks = []
    for t in range(1, n_tasks + 1):
        rng = np.random.default_rng([seed, t, 0x1A6E])
        templates = rng.standard_normal((n_classes, 1, side, side))
        parts = []
        for n in (n_train, n_valid, n_test):
            y = rng.permutation(np.arange(n) % n_classes)
            x = templates[y] + noise * rng.standard_normal((n, 1, side, side))
            parts.append(LabeledSet(x, y.astype(np.int64)))
        tasks.append(TaskDataset(t, *parts, n_classes=n_classes,
                                 transform={"kind": "synthetic-images", "seed": seed}))
    return tasks
