"""Feature preparation: local neighborhood aggregation and hierarchy merging.

Per-level backbone maps become a single locally aware feature map: each level
is averaged over a p x p window, deeper levels are bilinearly upsampled to the
shallowest level's grid, channels are concatenated in level order, and an
optional grouped channel average reduces the channel count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FeaturePrepError(Exception):
    pass


@dataclass(frozen=True)
class PrepConfig:
    patch_size: int = 3
    levels_used: tuple[int, ...] = (2, 3)
    target_channels: int | None = None

    def __post_init__(self):
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise FeaturePrepError(f"patch_size must be odd and positive, got {self.patch_size}")
        if not self.levels_used:
            raise FeaturePrepError("levels_used must be nonempty")
        if self.target_channels is not None and self.target_channels < 1:
            raise FeaturePrepError("target_channels must be positive or None")


@dataclass
class HierarchyStack:
    """Per-level feature maps, shallow to deep, spatial dims non-increasing."""

    levels: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        idx = [j for j, _ in self.levels]
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise FeaturePrepError(f"level indices must strictly increase, got {idx}")
        dims = [m.shape[1:] for _, m in self.levels]
        for a, b in zip(dims, dims[1:]):
            if b[0] > a[0] or b[1] > a[1]:
                raise FeaturePrepError(f"spatial dims must be non-increasing with level: {dims}")
        for _, m in self.levels:
            if m.ndim != 3:
                raise FeaturePrepError(f"expected (C, H, W) maps, got shape {m.shape}")

    def get(self, level: int) -> np.ndarray:
        for j, m in self.levels:
            if j == level:
                return m
        raise FeaturePrepError(f"level {level} not present (have {[j for j, _ in self.levels]})")


def aggregate_neighborhood(fmap: np.ndarray, p: int) -> np.ndarray:
    """Mean over the p x p window centered at each position, edges replicated.

    p = 1 is the identity. Accumulation runs in float64; the result keeps the
    input dtype.
    """
    if p < 1 or p % 2 == 0:
        raise FeaturePrepError(f"window size must be odd and positive, got {p}")
    if p == 1:
        return fmap.copy()
    r = p // 2
    padded = np.pad(fmap, ((0, 0), (r, r), (r, r)), mode="edge").astype(np.float64)
    # Summed-area table with a leading zero row/col so window sums are 4 lookups.
    sat = padded.cumsum(axis=1).cumsum(axis=2)
    sat = np.pad(sat, ((0, 0), (1, 0), (1, 0)))
    h, w = fmap.shape[1], fmap.shape[2]
    win = (
        sat[:, p : p + h, p : p + w]
        - sat[:, p : p + h, 0:w]
        - sat[:, 0:h, p : p + w]
        + sat[:, 0:h, 0:w]
    )
    return (win / (p * p)).astype(fmap.dtype)


def bilinear_resize(fmap: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with pixel-center alignment: src = (dst+0.5)*scale - 0.5.

    Source coordinates are clamped to the valid range, so constant maps stay
    constant and edges replicate on upsampling. This is the one resize used
    engine-wide (hierarchy merging and score-map upsampling).
    """
    if out_h < 1 or out_w < 1:
        raise FeaturePrepError(f"output dims must be positive, got {(out_h, out_w)}")
    c, in_h, in_w = fmap.shape
    if (in_h, in_w) == (out_h, out_w):
        return fmap.copy()

    def axis_coords(n_in: int, n_out: int):
        scale = n_in / n_out
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = src - lo
        return lo, hi, frac

    y0, y1, fy = axis_coords(in_h, out_h)
    x0, x1, fx = axis_coords(in_w, out_w)
    m = fmap.astype(np.float64)
    top = m[:, y0][:, :, x0] * (1 - fx) + m[:, y0][:, :, x1] * fx
    bot = m[:, y1][:, :, x0] * (1 - fx) + m[:, y1][:, :, x1] * fx
    out = top * (1 - fy[None, :, None]) + bot * fy[None, :, None]
    return out.astype(fmap.dtype)


def group_channel_average(fmap: np.ndarray, target: int) -> np.ndarray:
    """Reduce channels to ``target`` by averaging adaptive contiguous bins.

    Bin i covers channels floor(i*n/target) .. ceil((i+1)*n/target) - 1; equal
    bins (and an exactly preserved per-position mean) when target divides n.
    """
    n = fmap.shape[0]
    if target > n:
        raise FeaturePrepError(f"target_channels {target} > available channels {n}")
    if target == n:
        return fmap.copy()
    acc = fmap.astype(np.float64)
    out = np.empty((target,) + fmap.shape[1:], dtype=np.float64)
    for i in range(target):
        lo = (i * n) // target
        hi = -(-((i + 1) * n) // target)
        out[i] = acc[lo:hi].mean(axis=0)
    return out.astype(fmap.dtype)


def merge_hierarchies(stack: HierarchyStack, cfg: PrepConfig) -> np.ndarray:
    """Build the merged locally aware feature map t from a hierarchy stack."""
    maps = [stack.get(j) for j in cfg.levels_used]
    aggregated = [aggregate_neighborhood(m, cfg.patch_size) for m in maps]
    h, w = aggregated[0].shape[1:]
    resized = [bilinear_resize(m, h, w) if m.shape[1:] != (h, w) else m for m in aggregated]
    merged = np.concatenate(resized, axis=0)
    if cfg.target_channels is not None:
        merged = group_channel_average(merged, cfg.target_channels)
    return merged
