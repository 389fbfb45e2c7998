"""Deterministic binary container for named arrays.

Layout (all little-endian):
  8 bytes  magic "PLXARRS\\0"
  u32      format version (currently 1)
  u32      entry count
per entry:
  u16      name length, then UTF-8 name
  u8       dtype code (see DTYPE_CODES)
  u8       ndim
  ndim*u64 shape
  raw array bytes, C order

Zip-based formats embed timestamps; this one is byte-stable, which the
round-trip guarantees rely on."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import IoError, SchemaError

MAGIC = b"PLXARRS\x00"
VERSION = 1

DTYPE_CODES = {
    0: np.dtype("<f8"),
    1: np.dtype("<i8"),
    2: np.dtype("<u2"),
    3: np.dtype("u1"),
    4: np.dtype("<f4"),
}
CODE_FOR_DTYPE = {v: k for k, v in DTYPE_CODES.items()}


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    """Write arrays in dict order; insertion order is part of the bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [MAGIC, struct.pack("<II", VERSION, len(arrays))]
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dt = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        if dt not in CODE_FOR_DTYPE:
            # normalize to the canonical codes (int -> i8, float -> f8)
            if np.issubdtype(arr.dtype, np.floating):
                arr = arr.astype("<f8")
            elif np.issubdtype(arr.dtype, np.integer):
                arr = arr.astype("<i8")
            else:
                raise IoError(f"unsupported dtype {arr.dtype} for entry {name!r}")
            dt = arr.dtype
        code = CODE_FOR_DTYPE[dt]
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", code, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.astype(dt, copy=False).tobytes(order="C"))
    path.write_bytes(b"".join(chunks))


def load_arrays(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise IoError(f"container not found: {path}")
    buf = path.read_bytes()
    if buf[:8] != MAGIC:
        raise SchemaError(f"{path} is not an array container (bad magic)")
    version, count = struct.unpack_from("<II", buf, 8)
    if version != VERSION:
        raise SchemaError(f"unsupported container version {version}")
    offset = 16
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        name = buf[offset : offset + name_len].decode("utf-8")
        offset += name_len
        code, ndim = struct.unpack_from("<BB", buf, offset)
        offset += 2
        shape = struct.unpack_from(f"<{ndim}Q", buf, offset)
        offset += 8 * ndim
        if code not in DTYPE_CODES:
            raise SchemaError(f"unknown dtype code {code} for entry {name!r}")
        dt = DTYPE_CODES[code]
        n_elem = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(buf, dtype=dt, count=n_elem, offset=offset)
        offset += n_elem * dt.itemsize
        out[name] = arr.reshape(shape).copy()
    if offset != len(buf):
        raise SchemaError(f"{path}: trailing bytes after last entry")
    return out
