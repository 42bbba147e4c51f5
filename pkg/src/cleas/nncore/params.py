"""Named float64 parameter arrays with a parallel trainability mask."""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from cleas.errors import InvariantError, ParseError


class ParamStore:
    """Ordered mapping ``name -> float64 array`` plus a boolean mask per entry.

    A mask entry of ``True`` means the matching parameter entry may be updated
    by an optimizer; ``False`` entries are frozen.
    """

    def __init__(self):
        self.values: dict[str, np.ndarray] = {}
        self.masks: dict[str, np.ndarray] = {}

    def add(self, name: str, value, mask=None) -> None:
        value = np.array(value, dtype=np.float64)
        if mask is None:
            mask = np.ones(value.shape, dtype=bool)
        else:
            mask = np.array(np.broadcast_to(mask, value.shape), dtype=bool)
        if mask.shape != value.shape:
            raise InvariantError(f"mask shape {mask.shape} != value shape {value.shape} for {name!r}")
        self.values[name] = value
        self.masks[name] = mask

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __setitem__(self, name: str, value) -> None:
        value = np.asarray(value, dtype=np.float64)
        if name in self.values and value.shape != self.values[name].shape:
            raise InvariantError(f"cannot reshape {name!r} from {self.values[name].shape} to {value.shape}")
        if name not in self.values:
            self.add(name, value)
        else:
            self.values[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def keys(self):
        return self.values.keys()

    def items(self):
        return self.values.items()

    def copy(self) -> ParamStore:
        out = ParamStore()
        for name in self.values:
            out.values[name] = self.values[name].copy()
            out.masks[name] = self.masks[name].copy()
        return out

    def zeros_like(self) -> ParamStore:
        out = ParamStore()
        for name in self.values:
            out.values[name] = np.zeros_like(self.values[name])
            out.masks[name] = self.masks[name].copy()
        return out

    def size(self) -> int:
        return int(sum(v.size for v in self.values.values()))

    def n_trainable(self) -> int:
        return int(sum(m.sum() for m in self.masks.values()))

    def frozen_digest(self) -> str:
        """SHA-256 over every frozen entry; unchanged by any masked update."""
        h = hashlib.sha256()
        for name in self.values:
            h.update(name.encode())
            h.update(self.values[name][~self.masks[name]].tobytes())
        return h.hexdigest()

    def digest(self) -> str:
        return hashlib.sha256(to_bytes(self)).hexdigest()

    def check(self) -> None:
        for name, value in self.values.items():
            if self.masks[name].shape != value.shape:
                raise InvariantError(f"mask/value shape mismatch for {name!r}")


# Binary container. Per entry: u32 name length, UTF-8 name, u32 rank, u32 dims,
# little-endian f64 payload, mask packed little-endian bit order. No header.

def to_bytes(store: ParamStore) -> bytes:
    chunks = []
    for name, value in store.values.items():
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype="<f8").tobytes())
        chunks.append(np.packbits(store.masks[name].ravel(), bitorder="little").tobytes())
    return b"".join(chunks)


def from_bytes(data: bytes) -> ParamStore:
    store = ParamStore()
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise ParseError(f"truncated {what}", pos)
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    while pos < len(data):
        start = pos
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        try:
            name = take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8 name: {exc}", start + 4) from None
        (rank,) = struct.unpack("<I", take(4, "rank"))
        if rank > 16:
            raise ParseError(f"implausible rank {rank}", pos - 4)
        dims = struct.unpack(f"<{rank}I", take(4 * rank, "dims"))
        count = int(np.prod(dims, dtype=np.int64))
        value = np.frombuffer(take(8 * count, "payload"), dtype="<f8").astype(np.float64).reshape(dims)
        packed = np.frombuffer(take((count + 7) // 8, "mask"), dtype=np.uint8)
        mask = np.unpackbits(packed, bitorder="little", count=count).astype(bool).reshape(dims)
        if name in store:
            raise ParseError(f"duplicate entry {name!r}", start)
        store.add(name, value, mask)
    return store


def save(store: ParamStore, path) -> None:
    Path(path).write_bytes(to_bytes(store))


def load(path) -> ParamStore:
    return from_bytes(Path(path).read_bytes())
