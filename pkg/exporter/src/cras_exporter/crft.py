"""Writer/reader for the engine's CRFT tensor wire format.

Implemented against the byte contract, not against the engine package:
little-endian ``magic "CRFT" | version u16 | dtype u8 (1=f32, 2=u8) |
ndim u8 | dims ndim*u32 | row-major payload``.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"CRFT"
VERSION = 1
DTYPE_F32 = 1
DTYPE_U8 = 2


class CrftError(Exception):
    pass


def write(path: str | os.PathLike, tensor: np.ndarray) -> None:
    arr = np.asarray(tensor)
    if arr.dtype.kind == "f":
        arr = np.ascontiguousarray(arr, dtype="<f4")
        code = DTYPE_F32
        if not np.isfinite(arr).all():
            idx = int(np.flatnonzero(~np.isfinite(arr).ravel())[0])
            raise CrftError(f"non-finite value at flat index {idx}")
    elif arr.dtype == np.uint8:
        arr = np.ascontiguousarray(arr)
        code = DTYPE_U8
    else:
        raise CrftError(f"unsupported dtype {arr.dtype}")
    if arr.ndim not in (2, 3) or any(d == 0 for d in arr.shape):
        raise CrftError(f"bad shape {arr.shape}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(struct.pack("<4sHBB", MAGIC, VERSION, code, arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read(path: str | os.PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise CrftError(f"{path}: truncated header")
    magic, version, code, ndim = struct.unpack_from("<4sHBB", data, 0)
    if magic != MAGIC:
        raise CrftError(f"{path}: bad magic {magic!r}")
    if version > VERSION:
        raise CrftError(f"{path}: unsupported version {version}")
    if code not in (DTYPE_F32, DTYPE_U8) or ndim not in (2, 3):
        raise CrftError(f"{path}: bad header")
    dims = struct.unpack_from(f"<{ndim}I", data, 8)
    start = 8 + 4 * ndim
    dtype = np.dtype("<f4") if code == DTYPE_F32 else np.dtype("u1")
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(data) - start != expected:
        raise CrftError(f"{path}: payload length {len(data) - start} != {expected}")
    return np.frombuffer(data[start:], dtype=dtype).reshape(dims).copy()
