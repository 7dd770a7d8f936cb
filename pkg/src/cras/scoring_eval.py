"""Inference scoring and evaluation metrics.

A trained discriminator turns (feature, recomposed center) pairs into logits
per position; scores are logistic probabilities, bilinearly upsampled to the
target resolution and Gaussian-smoothed. Image scores take the spatial max.
AUROC uses the rank statistic with midrank ties; average precision sums
precision-weighted recall steps over descending score thresholds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cras import tensor_store
from cras.crd_train import concat_center_aware
from cras.feature_prep import bilinear_resize
from cras.nn_model import AdapterNet, DiscriminatorNet, ModelError, sigmoid
from cras import centers as ctr


class EvalError(Exception):
    pass


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian, truncated at radius ceil(4*sigma)."""
    if sigma <= 0:
        return np.array([1.0])
    radius = int(np.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _reflect_indices(n: int, radius: int) -> np.ndarray:
    """Mirror-without-edge-repeat index map for any pad radius."""
    idx = np.arange(-radius, n + radius)
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflect padding; sigma <= 0 is identity."""
    if sigma <= 0:
        return values.copy()
    kernel = gaussian_kernel(sigma)
    radius = len(kernel) // 2
    out = values.astype(np.float64)
    for axis in (0, 1):
        idx = _reflect_indices(out.shape[axis], radius)
        padded = np.take(out, idx, axis=axis)
        acc = np.zeros_like(out)
        for tap in range(len(kernel)):
            sl = [slice(None), slice(None)]
            sl[axis] = slice(tap, tap + out.shape[axis])
            acc += kernel[tap] * padded[tuple(sl)]
        out = acc
    return out.astype(values.dtype)


def score_map(
    u: np.ndarray,
    p: np.ndarray,
    disc: DiscriminatorNet,
    out_dims: tuple[int, int],
    smooth_sigma: float = 4.0,
    mode: str = "raw+residual",
) -> np.ndarray:
    """Per-pixel anomaly probabilities at the requested output resolution."""
    h0, w0 = out_dims
    if h0 < 1 or w0 < 1:
        raise EvalError(f"output dims must be positive, got {out_dims}")
    if not disc.fc2.weight.any() and not disc.fc2.bias.any():
        raise ModelError("discriminator appears untrained (zero logit head)")
    x = concat_center_aware(u, p, mode)
    width = x.shape[0]
    logits, _ = disc.forward(x.reshape(width, -1).T)
    probs = sigmoid(logits.astype(np.float64)).reshape(u.shape[1], u.shape[2])
    resized = bilinear_resize(probs[None, :, :], h0, w0)[0]
    smoothed = gaussian_smooth(resized, smooth_sigma)
    return np.clip(smoothed, 0.0, 1.0).astype(np.float32)


def score_image(smap: np.ndarray) -> float:
    """Image-level score: maximum over all positions."""
    if smap.size == 0:
        raise EvalError("empty score map")
    return float(smap.max())


def auroc(scores, labels) -> float:
    """Rank-based AUROC with midrank tie handling."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUROC needs both labels present")
    uniq, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    midranks = starts + (counts + 1) / 2.0  # 1-based average rank per value
    ranks = midranks[inverse]
    rank_sum_pos = float(ranks[y == 1].sum())
    u_stat = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u_stat / (n_pos * n_neg)


def average_precision(scores, labels) -> float:
    """AP as precision-weighted recall increments, ties grouped by score."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        raise EvalError("average precision needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    tp = np.cumsum(y_sorted == 1)
    fp = np.cumsum(y_sorted == 0)
    # last index of each tied group
    boundary = np.flatnonzero(np.diff(s_sorted) != 0)
    last = np.concatenate([boundary, [len(s_sorted) - 1]])
    precision = tp[last] / (tp[last] + fp[last])
    recall = tp[last] / n_pos
    recall_steps = np.diff(np.concatenate([[0.0], recall]))
    return float((recall_steps * precision).sum())


@dataclass
class SampleScore:
    sample_id: str
    category: str
    label: str
    score: float


@dataclass
class EvalReport:
    image_scores: list[SampleScore]
    per_category: dict[str, dict[str, float | None]]
    macro: dict[str, float | None]
    pixel_metrics_available: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "report_version": 1,
            "pixel_metrics_available": self.pixel_metrics_available,
            "notes": self.notes,
            "macro": self.macro,
            "per_category": self.per_category,
            "image_scores": [vars(s) for s in self.image_scores],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def format_table(self) -> str:
        cols = ["I-AUROC", "I-AP", "P-AUROC", "P-AP"]
        rows = [f"{'category':<16}" + "".join(f"{c:>10}" for c in cols)]
        for cat in sorted(self.per_category):
            vals = self.per_category[cat]
            rows.append(
                f"{cat:<16}"
                + "".join(
                    f"{vals.get(c): >10.4f}" if vals.get(c) is not None else f"{'-':>10}"
                    for c in cols
                )
            )
        rows.append(
            f"{'macro':<16}"
            + "".join(
                f"{self.macro.get(c): >10.4f}" if self.macro.get(c) is not None else f"{'-':>10}"
                for c in cols
            )
        )
        return "\n".join(rows)


def _category_metrics(scores, labels) -> dict[str, float | None]:
    out: dict[str, float | None] = {}
    y = np.asarray(labels)
    if (y == 1).any() and (y == 0).any():
        out["I-AUROC"] = auroc(scores, labels)
        out["I-AP"] = average_precision(scores, labels)
    else:
        out["I-AUROC"] = None
        out["I-AP"] = None
    return out


def evaluate(
    manifest: tensor_store.DatasetManifest,
    adapter: AdapterNet,
    disc: DiscriminatorNet,
    bank: ctr.CenterBank,
    smooth_sigma: float = 4.0,
    feature_mode: str = "raw+residual",
    score_dump_dir: str | Path | None = None,
    write_heatmaps: bool = False,
) -> EvalReport:
    """Score the manifest's test split and compute image and pixel metrics.

    Pixel metrics pool pixels within each category (and macro-average across
    categories); they are flagged unavailable rather than zeroed when masks
    are missing or only one pixel class exists.
    """
    entries = manifest.split("test")
    if not entries:
        raise EvalError("manifest test split is empty")
    notes: list[str] = []

    # common output resolution from the masks present in the split
    mask_dims: tuple[int, int] | None = None
    for e in entries:
        if e.mask_path is not None:
            mask = tensor_store.read_tensor(manifest.resolve(e.mask_path))
            mask_dims = mask.shape
            break
    if mask_dims is None:
        notes.append("no masks in test split; scoring at feature resolution")

    image_scores: list[SampleScore] = []
    pixel_scores: dict[str, list[np.ndarray]] = {}
    pixel_labels: dict[str, list[np.ndarray]] = {}
    pixel_ok = True

    for e in sorted(entries, key=lambda x: x.sample_id):
        t = tensor_store.read_tensor(manifest.resolve(e.path))
        u = ctr.adapt_map(t, adapter)
        _, p = ctr.recompose(u, bank)
        out_dims = mask_dims if mask_dims is not None else t.shape[1:]
        smap = score_map(u, p, disc, out_dims, smooth_sigma, feature_mode)
        image_scores.append(
            SampleScore(e.sample_id, e.category, e.label, score_image(smap))
        )
        if score_dump_dir is not None:
            dump = Path(score_dump_dir)
            tensor_store.write_tensor(dump / f"{e.sample_id}.crft", smap)
            if write_heatmaps:
                write_pgm(dump / f"{e.sample_id}.pgm", smap)

        if e.mask_path is not None:
            mask = tensor_store.read_tensor(manifest.resolve(e.mask_path))
            if mask.shape != smap.shape:
                raise EvalError(f"{e.sample_id}: mask dims {mask.shape} != score dims {smap.shape}")
            labels = (mask > 0).astype(np.uint8)
        elif e.label == "normal" and mask_dims is not None:
            labels = np.zeros(mask_dims, dtype=np.uint8)
        else:
            pixel_ok = False
            continue
        pixel_scores.setdefault(e.category, []).append(smap.ravel())
        pixel_labels.setdefault(e.category, []).append(labels.ravel())

    per_category: dict[str, dict[str, float | None]] = {}
    categories = sorted({s.category for s in image_scores})
    for cat in categories:
        cat_scores = [s.score for s in image_scores if s.category == cat]
        cat_labels = [1 if s.label == "anomalous" else 0 for s in image_scores if s.category == cat]
        metrics = _category_metrics(cat_scores, cat_labels)
        if metrics["I-AUROC"] is None:
            notes.append(f"{cat}: single-label test set, image metrics unavailable")
        if pixel_ok and mask_dims is not None and cat in pixel_scores:
            ps = np.concatenate(pixel_scores[cat])
            pl = np.concatenate(pixel_labels[cat])
            if (pl == 1).any() and (pl == 0).any():
                metrics["P-AUROC"] = auroc(ps, pl)
                metrics["P-AP"] = average_precision(ps, pl)
            else:
                metrics["P-AUROC"] = None
                metrics["P-AP"] = None
                notes.append(f"{cat}: single-class pixel labels, pixel metrics unavailable")
        else:
            metrics["P-AUROC"] = None
            metrics["P-AP"] = None
        per_category[cat] = metrics

    pixel_available = pixel_ok and mask_dims is not None and any(
        per_category[c]["P-AUROC"] is not None for c in categories
    )
    if not pixel_available and mask_dims is not None and not pixel_ok:
        notes.append("pixel metrics omitted: anomalous samples without masks")

    macro: dict[str, float | None] = {}
    for key in ("I-AUROC", "I-AP", "P-AUROC", "P-AP"):
        vals = [per_category[c][key] for c in categories if per_category[c][key] is not None]
        macro[key] = float(np.mean(vals)) if vals else None

    return EvalReport(
        image_scores=image_scores,
        per_category=per_category,
        macro=macro,
        pixel_metrics_available=pixel_available,
        notes=notes,
    )


def write_pgm(path: str | Path, values01: np.ndarray) -> None:
    """8-bit binary PGM heatmap: score * 255, for quick visual checks."""
    arr = np.clip(np.asarray(values01, dtype=np.float64), 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    h, w = data.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
