"""Per-category contextual centers and global-to-local matching.

A center is the positionwise mean of a category's adapted normal features.
Matching runs in two stages: a whole-map cosine argmax picks the category,
then each position vector of the input is aligned to its nearest center
vector (cosine again) within that single center. The local stage therefore
costs the same regardless of how many categories the bank holds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cras import tensor_store
from cras.nn_model import AdapterNet


class CenterError(Exception):
    pass


class DegenerateCenterError(CenterError):
    """Raised when a center (or query) flattens to the zero vector."""


@dataclass
class ClassCenter:
    category: str
    map: np.ndarray  # (C, H, W)
    flat: np.ndarray = field(repr=False, default=None)  # float64 cache of vec(map)
    flat_norm: float = 0.0

    def __post_init__(self):
        if self.flat is None:
            self.flat = self.map.astype(np.float64).ravel()
            self.flat_norm = float(np.linalg.norm(self.flat))
        if self.flat_norm <= 0.0:
            raise DegenerateCenterError(f"center {self.category!r} has zero norm")

    def position_matrix(self) -> np.ndarray:
        """Center vectors as rows: (H*W, C), float64."""
        c = self.map.shape[0]
        return self.map.reshape(c, -1).T.astype(np.float64)


@dataclass
class CenterBank:
    centers: list[ClassCenter]
    refresh_policy: str = "per-epoch"  # or "once"
    source_ids: dict[str, list[str]] | None = None

    def __post_init__(self):
        if self.refresh_policy not in ("per-epoch", "once"):
            raise CenterError(f"unknown refresh policy {self.refresh_policy!r}")
        cats = [c.category for c in self.centers]
        if len(set(cats)) != len(cats):
            raise CenterError(f"duplicate categories in bank: {cats}")
        dims = {c.map.shape for c in self.centers}
        if len(dims) > 1:
            raise CenterError(f"center maps must share dims, got {dims}")

    @property
    def categories(self) -> list[str]:
        return [c.category for c in self.centers]

    def get(self, category: str) -> ClassCenter:
        for c in self.centers:
            if c.category == category:
                return c
        raise CenterError(f"no center for category {category!r}")


def adapt_map(fmap: np.ndarray, adapter: AdapterNet) -> np.ndarray:
    """Apply the adapter channelwise at every spatial position."""
    c, h, w = fmap.shape
    x = fmap.reshape(c, -1).T.astype(adapter.layer.weight.dtype)
    out, _ = adapter.forward(x)
    return out.T.reshape(c, h, w)


def init_center(category: str, samples: list[np.ndarray], adapter: AdapterNet) -> ClassCenter:
    """Positionwise mean of adapted samples, the adapter held frozen."""
    if not samples:
        raise CenterError(f"no samples for category {category!r}")
    dims = samples[0].shape
    acc = np.zeros(dims, dtype=np.float64)
    for s in samples:
        if s.shape != dims:
            raise CenterError(f"sample dims {s.shape} != {dims} in category {category!r}")
        acc += adapt_map(s, adapter).astype(np.float64)
    mean = (acc / len(samples)).astype(samples[0].dtype)
    return ClassCenter(category=category, map=mean)


def match_class(u: np.ndarray, bank: CenterBank) -> tuple[str, float]:
    """Whole-map cosine argmax over the bank; ties go to the lowest index."""
    flat = u.astype(np.float64).ravel()
    norm = float(np.linalg.norm(flat))
    if norm <= 0.0:
        raise DegenerateCenterError("query feature map has zero norm")
    best_idx, best_sim = 0, -np.inf
    for i, center in enumerate(bank.centers):
        sim = float(flat @ center.flat) / (norm * center.flat_norm)
        if sim > best_sim:
            best_idx, best_sim = i, sim
    return bank.centers[best_idx].category, best_sim


def _normalized_rows(mat: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1)
    if (norms <= 0.0).any():
        pos = int(np.flatnonzero(norms <= 0.0)[0])
        raise DegenerateCenterError(f"{what} vector at linear index {pos} has zero norm")
    return mat / norms[:, None]


def align_patches(u: np.ndarray, center: ClassCenter) -> np.ndarray:
    """Recompose a center map by per-position nearest-center-vector lookup.

    For each (h, w) the output holds the center vector with the highest
    cosine similarity to u[:, h, w]; ties resolve to the lowest linear index.
    """
    c, h, w = u.shape
    if center.map.shape[0] != c:
        raise CenterError(f"channel mismatch: {center.map.shape[0]} vs {c}")
    queries = _normalized_rows(u.reshape(c, -1).T.astype(np.float64), "query")
    cmat = center.position_matrix()
    refs = _normalized_rows(cmat, "center")
    sims = queries @ refs.T  # (HW, HW_c)
    nearest = sims.argmax(axis=1)  # first max = lowest linear index
    return cmat[nearest].T.reshape(c, h, w).astype(u.dtype)


def recompose(u: np.ndarray, bank: CenterBank) -> tuple[str, np.ndarray]:
    """Global match then local alignment against only the matched center."""
    category, _ = match_class(u, bank)
    return category, align_patches(u, bank.get(category))


def flat_search_align(u: np.ndarray, bank: CenterBank) -> np.ndarray:
    """Single-stage baseline: nearest vector across every center of the bank.

    Kept as the timing and ablation contrast for the two-stage path; its cost
    grows linearly with the number of categories.
    """
    c = u.shape[0]
    queries = _normalized_rows(u.reshape(c, -1).T.astype(np.float64), "query")
    cmat = np.concatenate([ctr.position_matrix() for ctr in bank.centers], axis=0)
    refs = _normalized_rows(cmat, "center")
    sims = queries @ refs.T
    nearest = sims.argmax(axis=1)
    return cmat[nearest].T.reshape(u.shape).astype(u.dtype)


def build_center_bank(
    manifest: tensor_store.DatasetManifest,
    adapter: AdapterNet,
    refresh_policy: str = "per-epoch",
    center_mode: str = "mean",
    features_by_id: dict[str, np.ndarray] | None = None,
) -> CenterBank:
    """Initialize one center per category from the manifest's train split.

    center_mode "mean" averages every train sample; "single-sample" uses only
    the lexicographically first sample of each category. Features are read
    from disk unless a preloaded ``features_by_id`` mapping is given.
    """
    if center_mode not in ("mean", "single-sample"):
        raise CenterError(f"unknown center_mode {center_mode!r}")
    by_cat = manifest.by_category("train")
    centers = []
    source_ids: dict[str, list[str]] = {}
    for category in manifest.categories:
        entries = sorted(by_cat.get(category, []), key=lambda e: e.sample_id)
        if not entries:
            raise CenterError(f"category {category!r} has no train samples")
        if center_mode == "single-sample":
            entries = entries[:1]
        if features_by_id is None:
            samples = [tensor_store.read_tensor(manifest.resolve(e.path)) for e in entries]
        else:
            samples = [features_by_id[e.sample_id] for e in entries]
        centers.append(init_center(category, samples, adapter))
        source_ids[category] = [e.sample_id for e in entries]
    return CenterBank(centers=centers, refresh_policy=refresh_policy, source_ids=source_ids)


def refresh_center_bank(
    bank: CenterBank,
    features_by_id: dict[str, np.ndarray],
    adapter: AdapterNet,
) -> CenterBank:
    """Recompute every center from its recorded source samples, same policy."""
    if bank.source_ids is None:
        raise CenterError("bank has no recorded source sample ids to refresh from")
    centers = [
        init_center(c.category, [features_by_id[sid] for sid in bank.source_ids[c.category]], adapter)
        for c in bank.centers
    ]
    return CenterBank(centers=centers, refresh_policy=bank.refresh_policy, source_ids=bank.source_ids)


def save_center_bank(out_dir: str | Path, bank: CenterBank) -> None:
    """Persist as one CRFT file per center plus an index JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = {
        "refresh_policy": bank.refresh_policy,
        "source_ids": bank.source_ids,
        "centers": [],
    }
    for i, center in enumerate(bank.centers):
        name = f"center_{i:03d}.crft"
        tensor_store.write_tensor(out_dir / name, center.map.astype(np.float32))
        index["centers"].append({"category": center.category, "file": name})
    (out_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")


def load_center_bank(in_dir: str | Path) -> CenterBank:
    in_dir = Path(in_dir)
    index = json.loads((in_dir / "index.json").read_text(encoding="utf-8"))
    centers = [
        ClassCenter(category=rec["category"], map=tensor_store.read_tensor(in_dir / rec["file"]))
        for rec in index["centers"]
    ]
    return CenterBank(
        centers=centers,
        refresh_policy=index.get("refresh_policy", "per-epoch"),
        source_ids=index.get("source_ids"),
    )
