from __future__ import annotations

import gzip
import hashlib
import struct
from collections import Counter

import numpy as np
import pytest
from scipy.stats import norm

from cleas import data as D
from cleas.errors import ConfigError, ParseError

# sha256 of the permuted ramp image for (master seed 42, task 2), from scripts/replay_permutation.py
REPLAY_DIGEST = "b1178cb002386cfb3cfd7a036fef9226be7ff6562576d022c78e2155684c9b7f"


def idx_bytes(magic: int, dims, payload: bytes) -> bytes:
    return struct.pack(">I", magic) + struct.pack(f">{len(dims)}I", *dims) + payload


def test_idx_images_parse():
    payload = bytes(range(256)) * 6 + bytes(2 * 784 - 1536)
    raw = idx_bytes(0x00000803, (2, 28, 28), payload)
    assert raw[:4] == b"\x00\x00\x08\x03"
    arr = D.parse_idx(raw, D.IDX_IMAGES)
    assert arr.shape == (2, 28, 28)
    assert arr.reshape(2, -1)[0, 255] == 255


def test_idx_magic_checks():
    labels = idx_bytes(0x00000801, (3,), b"\x01\x02\x03")
    assert D.parse_idx(labels, D.IDX_LABELS).tolist() == [1, 2, 3]
    with pytest.raises(ParseError) as info:
        D.parse_idx(idx_bytes(0x00000803, (3,), b"\x01\x02\x03"), D.IDX_LABELS)
    assert info.value.offset == 0
    with pytest.raises(ParseError):
        D.parse_idx(b"\x00\x00\x0d\x01" + b"\x00" * 8)


def test_idx_truncation_offset():
    raw = idx_bytes(0x00000803, (2, 2, 2), b"\x00" * 5)
    with pytest.raises(ParseError) as info:
        D.parse_idx(raw)
    assert info.value.offset == len(raw)
    with pytest.raises(ParseError):
        D.parse_idx(b"\x00\x00\x08\x03\x00\x00")


def test_mnist_pair_scaling(tmp_path):
    images = idx_bytes(0x00000803, (2, 2, 2), bytes([0, 255, 128, 1, 255, 255, 0, 0]))
    labels = idx_bytes(0x00000801, (2,), bytes([7, 3]))
    (tmp_path / "img.gz").write_bytes(gzip.compress(images))
    (tmp_path / "lab").write_bytes(labels)
    s = D.load_mnist_pair(tmp_path / "img.gz", tmp_path / "lab")
    assert s.x.shape == (2, 4)
    assert s.x[0, 1] == 1.0 and s.x[0, 0] == 0.0
    assert s.y.tolist() == [7, 3]


def test_bundled_mnist_loads():
    from conftest import MNIST_DIR

    train, test = D.load_mnist_dir(MNIST_DIR)
    assert train.x.shape[1] == 784 and len(train) >= 6000 and len(test) >= 1000
    assert set(np.unique(train.y)) == set(range(10))
    assert 0.0 <= train.x.min() and train.x.max() <= 1.0


def test_cifar_rows(tmp_path):
    rows = []
    for label in (3, 9):
        rows.append(bytes([label]) + bytes([label] * 3072))
    (tmp_path / "b.bin").write_bytes(b"".join(rows))
    s = D.load_cifar_batches([tmp_path / "b.bin"])
    assert s.x.shape == (2, 3, 32, 32) and s.y.tolist() == [3, 9]
    (tmp_path / "bad.bin").write_bytes(b"".join(rows)[:-1])
    with pytest.raises(ParseError):
        D.load_cifar_batches([tmp_path / "bad.bin"])


def _base(n=30, features=784, seed=0):
    rng = np.random.default_rng(seed)
    mk = lambda m: D.LabeledSet(rng.random((m, features)), rng.integers(0, 10, m))
    return mk(n), mk(n // 2), mk(n // 2)


def test_permutation_identity_and_inverse():
    splits = _base()
    t1 = D.permute_task(splits, 1, 42)
    assert np.array_equal(t1.train.x, splits[0].x)
    t3 = D.permute_task(splits, 3, 42)
    perm = D.task_permutation(784, 3, 42)
    inverse = np.argsort(perm)
    assert np.array_equal(t3.test.x[:, inverse], splits[2].x)
    assert np.array_equal(D.task_permutation(784, 3, 42), perm)
    assert not np.array_equal(D.task_permutation(784, 2, 42), perm)


def test_permutation_replay_oracle():
    ramp = (np.arange(784) % 256).astype(np.float64) / 255.0
    base = D.LabeledSet(ramp[None, :], np.array([0]))
    task = D.permute_task((base, base, base), 2, 42)
    assert hashlib.sha256(task.train.x[0].astype("<f8").tobytes()).hexdigest() == REPLAY_DIGEST


def test_rotation_examples():
    pattern = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(D.rotate_image(pattern, 0.0), pattern)
    # counter-clockwise quarter turn, worked out by hand
    np.testing.assert_allclose(D.rotate_image(pattern, 90.0), [[2.0, 4.0], [1.0, 3.0]], atol=1e-12)
    img = np.random.default_rng(0).random((28, 28))
    np.testing.assert_allclose(D.rotate_image(img, 180.0), img[::-1, ::-1], atol=1e-9)
    np.testing.assert_array_equal(D.rotate_image(img, 180.0, order=0), img[::-1, ::-1])
    batch = np.stack([img, img.T])
    np.testing.assert_allclose(D.rotate_image(batch, 30.0)[1], D.rotate_image(img.T, 30.0))


def test_rotation_schedule():
    assert [D.rotation_angle(t, 5) for t in range(1, 6)] == [0.0, 45.0, 90.0, 135.0, 180.0]
    splits = _base(features=784)
    task = D.rotate_task(splits, 3, 5)
    assert task.transform["degrees"] == 90.0
    np.testing.assert_allclose(task.valid.x[0].reshape(28, 28), np.rot90(splits[1].x[0].reshape(28, 28)), atol=1e-9)


def test_class_split_indexing_and_counts():
    rng = np.random.default_rng(1)
    train = D.LabeledSet(rng.random((2000, 4)), rng.integers(0, 100, 2000))
    test = D.LabeledSet(rng.random((500, 4)), rng.integers(0, 100, 500))
    tasks = D.class_split(train, test, 10, n_valid=20, seed=0)
    t3 = tasks[2]
    assert t3.transform["classes"] == [20, 30]
    tally = Counter(int(y) for y in train.y)
    for t, task in enumerate(tasks):
        combined = Counter((np.concatenate([task.train.y, task.valid.y]) + 10 * t).tolist())
        assert combined == {c: tally[c] for c in range(10 * t, 10 * t + 10) if tally[c]}
        assert set(np.unique(task.test.y)) <= set(range(10))
        assert len(task.valid) == 20
    with pytest.raises(ConfigError):
        D.class_split(train, test, 7, 10, 0)


def test_splits_are_disjoint_and_stratified():
    rng = np.random.default_rng(2)
    pool = D.LabeledSet(np.arange(1000)[:, None].astype(float), rng.integers(0, 10, 1000))
    test = D.LabeledSet(np.arange(1000, 1500)[:, None].astype(float), rng.integers(0, 10, 500))
    train, valid, tst = D.base_splits(pool, test, 600, 100, 200, seed=3)
    assert len(train) == 600 and len(valid) == 100 and len(tst) == 200
    assert not set(train.x[:, 0]) & set(valid.x[:, 0])
    assert set(np.unique(valid.y)) == set(range(10))
    again = D.base_splits(pool, test, 600, 100, 200, seed=3)
    assert np.array_equal(again[1].x, valid.x)


def test_synthetic_determinism_and_separation():
    a = D.synth_tasks(2, 10, 3.0, seed=4)
    b = D.synth_tasks(2, 10, 3.0, seed=4)
    assert np.array_equal(a[1].train.x, b[1].train.x)
    far = D.synth_tasks(1, 5, 200.0, seed=0, n_train=100, n_valid=10, n_test=200)[0]
    w = far.train.x[far.train.y == 1].mean(0) - far.train.x[far.train.y == 0].mean(0)
    mid = (far.train.x[far.train.y == 1].mean(0) + far.train.x[far.train.y == 0].mean(0)) / 2
    assert np.mean(((far.test.x - mid) @ w > 0) == far.test.y) == 1.0
    with pytest.raises(ConfigError):
        D.synth_tasks(1, 5, 0.0, seed=0)


@pytest.mark.parametrize("sep", [1.0, 2.0, 3.0])
def test_bayes_accuracy_closed_form(sep):
    assert D.bayes_accuracy(sep) == pytest.approx(norm.cdf(sep / 2), abs=1e-15)
    task = D.synth_tasks(1, 8, sep, seed=5, n_train=2, n_valid=2, n_test=20000)[0]
    rng = np.random.default_rng([5, 1])
    basis, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    means = sep / np.sqrt(2.0) * basis[:, :2].T
    assert np.linalg.norm(means[0] - means[1]) == pytest.approx(sep)
    dist = ((task.test.x[:, None, :] - means[None]) ** 2).sum(-1)
    acc = np.mean(dist.argmin(1) == task.test.y)
    assert abs(acc - norm.cdf(sep / 2)) < 0.02
