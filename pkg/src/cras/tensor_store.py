"""Binary tensor files ("CRFT") and JSON-lines dataset manifests.

The CRFT layout is the wire contract with the feature exporter: little-endian
header ``magic "CRFT" | version u16 | dtype u8 | ndim u8 | dims ndim*u32``
followed by the row-major payload. Float payloads roundtrip bit-exactly.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"CRFT"
FORMAT_VERSION = 1
MANIFEST_VERSION = 1

DTYPE_F32 = 1
DTYPE_U8 = 2

_DTYPE_TO_CODE = {np.dtype("<f4"): DTYPE_F32, np.dtype("u1"): DTYPE_U8}
_CODE_TO_DTYPE = {DTYPE_F32: np.dtype("<f4"), DTYPE_U8: np.dtype("u1")}

SPLITS = ("train", "test")
LABELS = ("normal", "anomalous")


class TensorStoreError(Exception):
    """Base error for tensor file and manifest handling."""

    code = "tensor-store"


class BadMagicError(TensorStoreError):
    code = "bad-magic"


class UnsupportedVersionError(TensorStoreError):
    code = "unsupported-version"


class TruncatedPayloadError(TensorStoreError):
    code = "truncated-payload"


class BadHeaderError(TensorStoreError):
    code = "bad-header"


class NonFiniteValueError(TensorStoreError):
    code = "non-finite-value"


class ManifestError(TensorStoreError):
    code = "manifest"


def _as_storage_array(tensor: np.ndarray) -> np.ndarray:
    arr = np.asarray(tensor)
    if arr.dtype.kind == "f":
        return np.ascontiguousarray(arr, dtype="<f4")
    if arr.dtype == np.uint8:
        return np.ascontiguousarray(arr)
    raise TensorStoreError(f"unsupported dtype {arr.dtype}; expected float32 or uint8")


def write_tensor(path: str | os.PathLike, tensor: np.ndarray) -> None:
    """Write ``tensor`` (2-D or 3-D, float32 or uint8) atomically to ``path``."""
    arr = _as_storage_array(tensor)
    if arr.ndim not in (2, 3):
        raise TensorStoreError(f"ndim must be 2 or 3, got {arr.ndim}")
    if any(d == 0 for d in arr.shape):
        raise TensorStoreError(f"dims must be nonzero, got {arr.shape}")
    if arr.dtype.kind == "f":
        finite = np.isfinite(arr)
        if not finite.all():
            idx = int(np.flatnonzero(~finite.ravel())[0])
            raise NonFiniteValueError(f"non-finite value at flat index {idx}")

    header = struct.pack("<4sHBB", MAGIC, FORMAT_VERSION, _DTYPE_TO_CODE[arr.dtype], arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(dims)
            fh.write(arr.tobytes(order="C"))
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    """Read a CRFT file, validating magic, version, and payload length."""
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise TruncatedPayloadError(f"{path}: file shorter than fixed header")
    magic, version, dtype_code, ndim = struct.unpack_from("<4sHBB", data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: magic {magic!r} != {MAGIC!r}")
    if version > FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: version {version} > {FORMAT_VERSION}")
    if dtype_code not in _CODE_TO_DTYPE:
        raise BadHeaderError(f"{path}: unknown dtype code {dtype_code}")
    if ndim not in (2, 3):
        raise BadHeaderError(f"{path}: ndim {ndim} not in (2, 3)")
    dims_end = 8 + 4 * ndim
    if len(data) < dims_end:
        raise TruncatedPayloadError(f"{path}: header truncated in dims")
    dims = struct.unpack_from(f"<{ndim}I", data, 8)
    dtype = _CODE_TO_DTYPE[dtype_code]
    expected = int(np.prod(dims)) * dtype.itemsize
    actual = len(data) - dims_end
    if actual != expected:
        raise TruncatedPayloadError(f"{path}: payload {actual} bytes, expected {expected}")
    arr = np.frombuffer(data[dims_end:], dtype=dtype).reshape(dims)
    return arr.copy()


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    category: str
    sample_id: str
    split: str
    label: str
    mask_path: str | None = None
    level: int | None = None

    def to_record(self) -> dict:
        rec = {
            "path": self.path,
            "category": self.category,
            "sample_id": self.sample_id,
            "split": self.split,
            "label": self.label,
        }
        if self.mask_path is not None:
            rec["mask_path"] = self.mask_path
        if self.level is not None:
            rec["level"] = self.level
        return rec


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: Path = field(default_factory=Path)

    @property
    def categories(self) -> list[str]:
        """Ordered class label set: lexicographic, independent of record order."""
        return sorted({e.category for e in self.entries})

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def resolve(self, rel: str) -> Path:
        return self.root / rel

    def by_category(self, split: str) -> dict[str, list[ManifestEntry]]:
        out: dict[str, list[ManifestEntry]] = {k: [] for k in self.categories}
        for e in self.split(split):
            out[e.category].append(e)
        return out


def _validate_entries(entries: list[ManifestEntry]) -> None:
    seen: set[str] = set()
    for e in entries:
        if e.path in seen:
            raise ManifestError(f"duplicate path {e.path!r}")
        seen.add(e.path)
        if e.split not in SPLITS:
            raise ManifestError(f"{e.path}: bad split {e.split!r}")
        if e.label not in LABELS:
            raise ManifestError(f"{e.path}: bad label {e.label!r}")
        if e.split == "train" and e.label != "normal":
            raise ManifestError(f"{e.path}: train entries must be normal")
        if e.split == "train" and e.mask_path is not None:
            raise ManifestError(f"{e.path}: train entries carry no masks")
        if e.label == "anomalous" and e.mask_path is None:
            raise ManifestError(f"{e.path}: anomalous entry without mask_path")


def load_manifest(path: str | os.PathLike, eager: bool = False) -> DatasetManifest:
    """Parse a JSON-lines manifest; first record must carry the schema version."""
    path = Path(path)
    entries: list[ManifestEntry] = []
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise ManifestError(f"{path}: empty manifest")
    header = json.loads(lines[0])
    if header.get("manifest_version") != MANIFEST_VERSION:
        raise ManifestError(f"{path}: expected manifest_version {MANIFEST_VERSION} header")
    for ln in lines[1:]:
        rec = json.loads(ln)
        try:
            entries.append(
                ManifestEntry(
                    path=rec["path"],
                    category=rec["category"],
                    sample_id=rec["sample_id"],
                    split=rec["split"],
                    label=rec["label"],
                    mask_path=rec.get("mask_path"),
                    level=rec.get("level"),
                )
            )
        except KeyError as exc:
            raise ManifestError(f"{path}: record missing field {exc}") from exc
    _validate_entries(entries)
    manifest = DatasetManifest(entries=entries, root=path.parent)
    if eager:
        for e in entries:
            if not manifest.resolve(e.path).exists():
                raise ManifestError(f"{path}: missing file {e.path}")
            if e.mask_path is not None and not manifest.resolve(e.mask_path).exists():
                raise ManifestError(f"{path}: missing mask {e.mask_path}")
    return manifest


def write_manifest(path: str | os.PathLike, entries: list[ManifestEntry]) -> None:
    _validate_entries(entries)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"manifest_version": MANIFEST_VERSION}) + "\n")
        for e in entries:
            fh.write(json.dumps(e.to_record(), sort_keys=True) + "\n")
