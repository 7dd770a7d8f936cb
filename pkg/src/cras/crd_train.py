"""Center-aware residual discrimination: pair construction, loss, training.

Training alternates over mixed-category batches: features are adapted,
recomposed against the matched center, perturbed into synthetic anomalies,
and a shared discriminator is trained to separate the normal branch from the
synthetic branch. Gradients flow into the adapter from both branches,
including through the residual-dependent noise scale; the recomposed center
is a constant within a step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from cras import centers as ctr
from cras import dafs
from cras import nn_model as nn
from cras import tensor_store

log = logging.getLogger(__name__)

FEATURE_MODES = ("raw", "residual", "raw+residual")


class TrainingError(Exception):
    pass


class TrainingDivergedError(TrainingError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lr_adapter: float = 1e-4
    lr_discriminator: float = 2e-4
    weight_decay: float = 1e-2
    noise: dafs.NoiseConfig = field(default_factory=dafs.NoiseConfig)
    refresh_policy: str = "per-epoch"
    seed: int = 0
    feature_mode: str = "raw+residual"
    center_mode: str = "mean"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise TrainingError("epochs and batch_size must be positive")
        if self.feature_mode not in FEATURE_MODES:
            raise TrainingError(f"feature_mode must be one of {FEATURE_MODES}")
        if self.refresh_policy not in ("per-epoch", "once"):
            raise TrainingError(f"unknown refresh_policy {self.refresh_policy!r}")

    def discriminator_width(self, channels: int) -> int:
        return 2 * channels if self.feature_mode == "raw+residual" else channels


@dataclass
class CenterAwarePair:
    """Discriminator inputs for one sample: normal branch y, anomalous z."""

    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        if self.y.shape != self.z.shape:
            raise TrainingError(f"branch dims differ: {self.y.shape} vs {self.z.shape}")


def concat_center_aware(u_or_v: np.ndarray, p: np.ndarray, mode: str) -> np.ndarray:
    """Discriminator input per mode: the feature, its center residual, or both."""
    if u_or_v.shape != p.shape:
        raise TrainingError(f"dim mismatch: {u_or_v.shape} vs {p.shape}")
    if mode == "raw":
        return u_or_v.copy()
    if mode == "residual":
        return u_or_v - p
    if mode == "raw+residual":
        return np.concatenate([u_or_v, u_or_v - p], axis=0)
    raise TrainingError(f"unknown feature mode {mode!r}")


def make_pair(u: np.ndarray, v: np.ndarray, p: np.ndarray, mode: str) -> CenterAwarePair:
    return CenterAwarePair(
        y=concat_center_aware(u, p, mode),
        z=concat_center_aware(v, p, mode),
    )


def _positions(fmap: np.ndarray) -> np.ndarray:
    """(C, H, W) -> (H*W, C)."""
    return fmap.reshape(fmap.shape[0], -1).T


def batch_loss(pairs: list[CenterAwarePair], disc: nn.DiscriminatorNet) -> float:
    """Mean binary cross-entropy over samples, positions, and both branches."""
    if not pairs:
        raise TrainingError("empty batch")
    total = 0.0
    count = 0
    for pair in pairs:
        ly, _ = disc.forward(_positions(pair.y))
        lz, _ = disc.forward(_positions(pair.z))
        total += float(nn.bce_with_logits(ly, 0.0).sum())
        total += float(nn.bce_with_logits(lz, 1.0).sum())
        count += ly.size + lz.size
    loss = total / count
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite batch loss {loss}")
    return loss


def _split_upstream(dy, dz, channels: int, mode: str):
    """Route discriminator input gradients to (du_direct, dd_from_y, dv)."""
    if mode == "raw":
        return dy, np.zeros_like(dy), dz
    if mode == "residual":
        return np.zeros_like(dy), dy, dz
    c = channels
    return dy[..., :c], dy[..., c:], dz[..., :c] + dz[..., c:]


def step_loss(t_nchw, p_nchw, g_nchw, adapter, disc, beta: float, mode: str) -> float:
    """Forward-only training-step loss (the finite-difference oracle target)."""
    loss, _, _ = _step_impl(t_nchw, p_nchw, g_nchw, adapter, disc, beta, mode, want_grads=False)
    return loss


def step_loss_and_grads(t_nchw, p_nchw, g_nchw, adapter, disc, beta: float, mode: str):
    """One training step's loss and parameter gradients.

    Inputs are (N, C, H, W) batches: raw features t, recomposed centers p
    (constant), sampled noise g (constant). Returns (loss, adapter_grads,
    disc_grads).
    """
    return _step_impl(t_nchw, p_nchw, g_nchw, adapter, disc, beta, mode, want_grads=True)


def _step_impl(t_nchw, p_nchw, g_nchw, adapter, disc, beta, mode, want_grads):
    n, c, h, w = t_nchw.shape
    hw = h * w

    x = np.ascontiguousarray(t_nchw.transpose(0, 2, 3, 1)).reshape(-1, c)
    u_flat, a_cache = adapter.forward(x)
    u = u_flat.reshape(n, h, w, c)
    p = p_nchw.transpose(0, 2, 3, 1)
    g = g_nchw.transpose(0, 2, 3, 1)

    d = u - p
    r = np.sqrt(np.einsum("nhwc,nhwc->nhw", d.astype(np.float64), d.astype(np.float64)))
    gn = np.sqrt(np.einsum("nhwc,nhwc->nhw", g.astype(np.float64), g.astype(np.float64)))

    # Per-sample noise scale map; zero residuals borrow the sample's smallest
    # positive residual, fully degenerate samples fall back to scale 1.
    r_masked = np.where(r > 0.0, r, np.inf)
    min_pos = r_masked.min(axis=(1, 2))
    degenerate = ~np.isfinite(min_pos)
    min_pos = np.where(degenerate, 1.0, min_pos)
    r_safe = np.where(r > 0.0, r, min_pos[:, None, None])
    q = gn / r_safe
    m = q.mean(axis=(1, 2))
    m_safe = np.where(m > 0.0, m, 1.0)
    alpha = beta * (q / m_safe[:, None, None] - 1.0) + 1.0
    alpha[degenerate | (m <= 0.0)] = 1.0

    dtype = u.dtype
    v = u + alpha[..., None].astype(dtype) * g

    if mode == "raw":
        y_in, z_in = u, v
    elif mode == "residual":
        y_in, z_in = d, v - p
    else:
        y_in = np.concatenate([u, d], axis=-1)
        z_in = np.concatenate([v, v - p], axis=-1)

    width = y_in.shape[-1]
    ly, cache_y = disc.forward(y_in.reshape(-1, width))
    lz, cache_z = disc.forward(z_in.reshape(-1, width))

    denom = 2.0 * n * hw
    loss = float(nn.bce_with_logits(ly, 0.0).sum() + nn.bce_with_logits(lz, 1.0).sum()) / denom
    if not want_grads:
        return loss, None, None
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite step loss {loss}")

    dly = (nn.sigmoid(ly.astype(np.float64)) / denom).astype(dtype)
    dlz = ((nn.sigmoid(lz.astype(np.float64)) - 1.0) / denom).astype(dtype)
    dy_flat, disc_gy = disc.backward(cache_y, dly)
    dz_flat, disc_gz = disc.backward(cache_z, dlz)
    disc_grads = {k: disc_gy[k] + disc_gz[k] for k in disc_gy}

    dy = dy_flat.reshape(n, h, w, width)
    dz = dz_flat.reshape(n, h, w, width)
    du_direct, dd, dv = _split_upstream(dy, dz, c, mode)

    # v = u + alpha * g: direct path plus the scale map's dependence on r(u).
    dalpha = np.einsum("nhwc,nhwc->nhw", dv.astype(np.float64), g.astype(np.float64))
    live = beta != 0.0 and not degenerate.all()
    if live:
        weighted = (dalpha * q).sum(axis=(1, 2))
        dq = (beta / m_safe)[:, None, None] * dalpha
        dq -= (beta * weighted / (m_safe**2 * hw))[:, None, None]
        dq[degenerate | (m <= 0.0)] = 0.0
        dr = np.where(r > 0.0, -dq * gn / (r_safe**2), 0.0)
        dd = dd + (np.where(r > 0.0, dr / r_safe, 0.0)[..., None] * d.astype(np.float64)).astype(dtype)

    du = du_direct + dv + dd
    _, adapter_grads = adapter.backward(a_cache, du.reshape(-1, c))
    return loss, adapter_grads, disc_grads


@dataclass
class TrainResult:
    adapter: nn.AdapterNet
    disc: nn.DiscriminatorNet
    bank: ctr.CenterBank
    log: list[dict]
    final_epoch_loss: float


def load_train_features(manifest: tensor_store.DatasetManifest) -> dict[str, np.ndarray]:
    entries = manifest.split("train")
    if not entries:
        raise TrainingError("manifest train split is empty")
    return {e.sample_id: tensor_store.read_tensor(manifest.resolve(e.path)) for e in entries}


def train(
    manifest: tensor_store.DatasetManifest,
    bank: ctr.CenterBank | None,
    cfg: TrainConfig,
    features_by_id: dict[str, np.ndarray] | None = None,
) -> TrainResult:
    """Run the full training loop; deterministic for a fixed config and seed."""
    feats = features_by_id if features_by_id is not None else load_train_features(manifest)
    train_entries = sorted(manifest.split("train"), key=lambda e: e.sample_id)
    if not train_entries:
        raise TrainingError("manifest train split is empty")
    sample_ids = [e.sample_id for e in train_entries]
    c, h, w = feats[sample_ids[0]].shape

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    adapter = nn.AdapterNet(c, rng)
    disc = nn.DiscriminatorNet(cfg.discriminator_width(c), c, rng)
    opt_adapter = nn.OptimState(lr=cfg.lr_adapter, weight_decay=cfg.weight_decay)
    opt_disc = nn.OptimState(lr=cfg.lr_discriminator, weight_decay=cfg.weight_decay)

    if bank is None:
        bank = ctr.build_center_bank(
            manifest,
            adapter,
            refresh_policy=cfg.refresh_policy,
            center_mode=cfg.center_mode,
            features_by_id=feats,
        )

    log_rows: list[dict] = []
    global_step = 0
    epoch_loss = float("nan")
    for epoch in range(cfg.epochs):
        if cfg.refresh_policy == "per-epoch":
            bank = ctr.refresh_center_bank(bank, feats, adapter)
        # noise seeds derive from (noise.seed, sample_id, step); logging the
        # base per epoch makes any epoch replayable in isolation
        log_rows.append(
            {
                "event": "epoch_start",
                "epoch": epoch,
                "noise_seed_base": cfg.noise.seed,
                "first_step": global_step,
            }
        )
        order = rng.permutation(len(sample_ids))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch_ids = [sample_ids[i] for i in order[start : start + cfg.batch_size]]
            t_batch = np.stack([feats[sid] for sid in batch_ids])

            p_maps = []
            for i, sid in enumerate(batch_ids):
                u_i = ctr.adapt_map(t_batch[i], adapter)
                _, p_i = ctr.recompose(u_i, bank)
                p_maps.append(p_i)
            p_batch = np.stack(p_maps)

            g_batch = np.stack(
                [
                    dafs.sample_noise(
                        (c, h, w),
                        replace(cfg.noise, seed=dafs.derive_seed(cfg.noise.seed, sid, global_step)),
                    )
                    for sid in batch_ids
                ]
            )

            loss, a_grads, d_grads = step_loss_and_grads(
                t_batch, p_batch, g_batch, adapter, disc, cfg.noise.beta, cfg.feature_mode
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"loss diverged at epoch {epoch} step {global_step}")
            nn.adamw_step(adapter.params(), a_grads, opt_adapter)
            nn.adamw_step(disc.params(), d_grads, opt_disc)

            grad_norm = float(
                np.sqrt(
                    sum(float(np.square(g.astype(np.float64)).sum()) for g in a_grads.values())
                    + sum(float(np.square(g.astype(np.float64)).sum()) for g in d_grads.values())
                )
            )
            log_rows.append(
                {"event": "step", "epoch": epoch, "step": global_step, "loss": loss, "grad_norm": grad_norm}
            )
            losses.append(loss)
            global_step += 1
        epoch_loss = float(np.mean(losses))
        log.debug("epoch %d mean loss %.6f", epoch, epoch_loss)

    return TrainResult(adapter=adapter, disc=disc, bank=bank, log=log_rows, final_epoch_loss=epoch_loss)
