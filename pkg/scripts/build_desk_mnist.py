"""Write desk-scale MNIST IDX files from the digit JSON shipped in the npm ``mnist`` package.

The npm package (cazala/mnist, v1.1.0) bundles 10,000 MNIST digits as
``src/digits/<label>.json`` with pixels stored as 3-decimal floats.  This
script rounds them back to bytes, shuffles with a fixed seed and writes
gzip-compressed IDX files:

    train-images-idx3-ubyte.gz / train-labels-idx1-ubyte.gz   (8,000 samples)
    t10k-images-idx3-ubyte.gz  / t10k-labels-idx1-ubyte.gz    (2,000 samples)

Usage:
    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python scripts/build_desk_mnist.py package/src/digits data/mnist
"""

import argparse
import gzip
import json
import struct
from pathlib import Path

import numpy as np


def write_idx(path, array):
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x0800 | array.ndim
    header = struct.pack(">I", magic) + struct.pack(">" + "I" * array.ndim, *array.shape)
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        f.write(header)
        f.write(array.tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("digits_dir", type=Path)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--n-test", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    images, labels = [], []
    for digit in range(10):
        data = np.asarray(json.loads((args.digits_dir / f"{digit}.json").read_text())["data"])
        data = data.reshape(-1, 28, 28)
        images.append(np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8))
        labels.append(np.full(len(data), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)

    order = np.random.default_rng(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]
    n_train = len(labels) - args.n_test

    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(args.out_dir / "train-images-idx3-ubyte.gz", images[:n_train])
    write_idx(args.out_dir / "train-labels-idx1-ubyte.gz", labels[:n_train])
    write_idx(args.out_dir / "t10k-images-idx3-ubyte.gz", images[n_train:])
    write_idx(args.out_dir / "t10k-labels-idx1-ubyte.gz", labels[n_train:])
    print(f"wrote {n_train} train / {args.n_test} test samples to {args.out_dir}")


if __name__ == "__main__":
    main()
