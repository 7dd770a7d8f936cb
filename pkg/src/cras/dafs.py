"""Distance-guided anomaly feature synthesis.

Gaussian noise is rescaled per spatial position by the ratio of its own norm
to the feature's residual norm from the recomposed center, normalized so the
scale map always averages to one. Positions close to the center (small
residual) receive stronger noise, dispersed positions receive weaker noise.
"""

from __future__ import annotations

import hashlib
import logging
import warnings
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class SynthesisError(Exception):
    pass


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = 0.015
    beta: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise SynthesisError(f"sigma must be positive, got {self.sigma}")
        if self.beta < 0.0:
            raise SynthesisError(f"beta must be non-negative, got {self.beta}")


def derive_seed(base_seed: int, sample_id: str, step: int) -> int:
    """Stable per-(sample, step) seed: base xor a keyed blake2b digest."""
    digest = hashlib.blake2b(f"{sample_id}\x1f{step}".encode("utf-8"), digest_size=8).digest()
    return (base_seed ^ int.from_bytes(digest, "little")) & (2**64 - 1)


def sample_noise(dims: tuple[int, ...], cfg: NoiseConfig, dtype=np.float32) -> np.ndarray:
    """I.i.d. N(0, sigma^2) tensor from a seeded uniform source via Box-Muller.

    Same (dims, cfg) always yields a bit-identical tensor.
    """
    n = int(np.prod(dims))
    half = (n + 1) // 2
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    # 1 - U keeps the log argument in (0, 1], avoiding log(0).
    u1 = 1.0 - rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    return (cfg.sigma * z).reshape(dims).astype(dtype)


def residual_norm_map(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Per-position Euclidean distance over channels: (C,H,W) x 2 -> (H,W)."""
    if u.shape != p.shape:
        raise SynthesisError(f"dim mismatch: {u.shape} vs {p.shape}")
    d = u.astype(np.float64) - p.astype(np.float64)
    return np.sqrt(np.einsum("chw,chw->hw", d, d))


def norm_map(g: np.ndarray) -> np.ndarray:
    """Per-position Euclidean norm over channels."""
    g64 = g.astype(np.float64)
    return np.sqrt(np.einsum("chw,chw->hw", g64, g64))


def distance_ratio_map(g_norms: np.ndarray, r_norms: np.ndarray, beta: float) -> np.ndarray:
    """Per-position noise scale: beta * (ratio / mean(ratio) - 1) + 1.

    ratio = g_norm / r_norm. Zero residuals are replaced by the smallest
    positive residual in the map; if every residual is zero the scale map
    degenerates to all ones (features coincide with the center).
    """
    if g_norms.shape != r_norms.shape:
        raise SynthesisError(f"dim mismatch: {g_norms.shape} vs {r_norms.shape}")
    r = np.asarray(r_norms, dtype=np.float64)
    g = np.asarray(g_norms, dtype=np.float64)
    positive = r[r > 0.0]
    if positive.size == 0:
        warnings.warn("all residual norms are zero; noise scale map set to 1", RuntimeWarning)
        return np.ones_like(r)
    r_safe = np.where(r > 0.0, r, positive.min())
    ratio = g / r_safe
    mean_ratio = ratio.mean()
    if mean_ratio == 0.0:
        return np.ones_like(r)
    return beta * (ratio / mean_ratio - 1.0) + 1.0


def synthesize(u: np.ndarray, alpha: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Anomaly feature: u + alpha * g, the scale map broadcast over channels."""
    if alpha.shape != u.shape[1:]:
        raise SynthesisError(f"scale map dims {alpha.shape} != spatial dims {u.shape[1:]}")
    if g.shape != u.shape:
        raise SynthesisError(f"noise dims {g.shape} != feature dims {u.shape}")
    return u + alpha[None, :, :].astype(u.dtype) * g
