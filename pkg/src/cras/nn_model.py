"""Minimal dense network core: feature adapter, discriminator, AdamW.

Everything is plain numpy with hand-written reverse-mode gradients for this
fixed stack. Training math defaults to float32; verification (finite
difference checks) runs the same code in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cras import tensor_store

CHECKPOINT_MAGIC = b"CRMD"
CHECKPOINT_VERSION = 1
LEAKY_SLOPE = 0.2


class ModelError(Exception):
    pass


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)

    def __post_init__(self):
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ModelError("weight must be 2-D and bias 1-D")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ModelError(
                f"bias dim {self.bias.shape[0]} != weight out dim {self.weight.shape[0]}"
            )
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ModelError("non-finite parameter")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """x: (batch, in_dim) -> (batch, out_dim)."""
    if x.ndim != 2 or x.shape[1] != layer.in_dim:
        raise ModelError(f"input shape {x.shape} incompatible with in_dim {layer.in_dim}")
    return x @ layer.weight.T + layer.bias


def dense_backward(layer: DenseLayer, x: np.ndarray, dout: np.ndarray):
    """Gradients of a cached forward: returns (dx, dweight, dbias)."""
    if x.shape[0] != dout.shape[0] or dout.shape[1] != layer.out_dim:
        raise ModelError("upstream gradient shape does not match cached forward")
    dweight = dout.T @ x
    dbias = dout.sum(axis=0)
    dx = dout @ layer.weight
    return dx, dweight, dbias


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def leaky_relu_backward(x: np.ndarray, dout: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x >= 0, dout, slope * dout)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic map."""
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out.astype(x.dtype) if x.dtype.kind == "f" else out


def bce_with_logits(logits, targets) -> np.ndarray:
    """Elementwise -[t*log s(l) + (1-t)*log(1-s(l))], stable for |l| up to 1e4."""
    l = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    return np.maximum(l, 0.0) - l * t + np.log1p(np.exp(-np.abs(l)))


class AdapterNet:
    """Single dense C -> C layer, initialized near identity."""

    def __init__(self, channels: int, rng: np.random.Generator, dtype=np.float32, init_scale: float = 1e-4):
        eye = np.eye(channels)
        self.layer = DenseLayer(
            weight=(eye + rng.normal(0.0, init_scale, size=(channels, channels))).astype(dtype),
            bias=np.zeros(channels, dtype=dtype),
        )

    @property
    def channels(self) -> int:
        return self.layer.in_dim

    def params(self) -> dict[str, np.ndarray]:
        return {"adapter.weight": self.layer.weight, "adapter.bias": self.layer.bias}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.layer = DenseLayer(weight=params["adapter.weight"], bias=params["adapter.bias"])

    def forward(self, x: np.ndarray):
        return dense_forward(self.layer, x), x

    def backward(self, cache: np.ndarray, dout: np.ndarray):
        dx, dw, db = dense_backward(self.layer, cache, dout)
        return dx, {"adapter.weight": dw, "adapter.bias": db}


class DiscriminatorNet:
    """dense(in -> hidden) + leaky rectifier + dense(hidden -> 1) logit."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, dtype=np.float32):
        # Xavier-normal first layer; zero logit head so training starts from
        # an uncommitted state (logit 0 everywhere, loss ln 2).
        s1 = np.sqrt(2.0 / (in_dim + hidden))
        self.fc1 = DenseLayer(
            weight=rng.normal(0.0, s1, size=(hidden, in_dim)).astype(dtype),
            bias=np.zeros(hidden, dtype=dtype),
        )
        self.fc2 = DenseLayer(
            weight=np.zeros((1, hidden), dtype=dtype),
            bias=np.zeros(1, dtype=dtype),
        )

    @property
    def in_dim(self) -> int:
        return self.fc1.in_dim

    def params(self) -> dict[str, np.ndarray]:
        return {
            "disc.fc1.weight": self.fc1.weight,
            "disc.fc1.bias": self.fc1.bias,
            "disc.fc2.weight": self.fc2.weight,
            "disc.fc2.bias": self.fc2.bias,
        }

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.fc1 = DenseLayer(weight=params["disc.fc1.weight"], bias=params["disc.fc1.bias"])
        self.fc2 = DenseLayer(weight=params["disc.fc2.weight"], bias=params["disc.fc2.bias"])

    def forward(self, x: np.ndarray):
        """x: (batch, in_dim) -> logits (batch,), plus backward cache."""
        pre = dense_forward(self.fc1, x)
        act = leaky_relu(pre)
        logits = dense_forward(self.fc2, act)[:, 0]
        return logits, (x, pre, act)

    def backward(self, cache, dlogits: np.ndarray):
        x, pre, act = cache
        dact, dw2, db2 = dense_backward(self.fc2, act, dlogits[:, None])
        dpre = leaky_relu_backward(pre, dact)
        dx, dw1, db1 = dense_backward(self.fc1, x, dpre)
        return dx, {
            "disc.fc1.weight": dw1,
            "disc.fc1.bias": db1,
            "disc.fc2.weight": dw2,
            "disc.fc2.bias": db2,
        }


@dataclass
class OptimState:
    """Decoupled-weight-decay Adam moments for one named parameter set."""

    lr: float
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: OptimState) -> None:
    """One in-place AdamW update on every parameter in ``params``."""
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ModelError(f"{name}: grad shape {g.shape} != param shape {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        if state.weight_decay:
            p *= 1.0 - state.lr * state.weight_decay
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def save_checkpoint(path: str | Path, adapter: AdapterNet, disc: DiscriminatorNet) -> None:
    """"CRMD" file: magic, version u16, then six embedded CRFT records.

    Fixed order: adapter weight, adapter bias, disc fc1 weight, disc fc1 bias,
    disc fc2 weight, disc fc2 bias. Biases are stored as (1, n) tensors since
    the CRFT contract is 2-D/3-D only.
    """
    import io
    import os
    import tempfile

    tensors = [
        adapter.layer.weight,
        adapter.layer.bias[None, :],
        disc.fc1.weight,
        disc.fc1.bias[None, :],
        disc.fc2.weight,
        disc.fc2.bias[None, :],
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(struct.pack("<4sH", CHECKPOINT_MAGIC, CHECKPOINT_VERSION))
            for t in tensors:
                buf = io.BytesIO()
                _write_crft_record(buf, np.ascontiguousarray(t, dtype="<f4"))
                fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_crft_record(fh, arr: np.ndarray) -> None:
    fh.write(struct.pack("<4sHBB", tensor_store.MAGIC, tensor_store.FORMAT_VERSION, tensor_store.DTYPE_F32, arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(arr.tobytes(order="C"))


def _read_crft_record(data: bytes, offset: int):
    magic, version, dtype_code, ndim = struct.unpack_from("<4sHBB", data, offset)
    if magic != tensor_store.MAGIC:
        raise tensor_store.BadMagicError(f"embedded record at offset {offset}")
    if version > tensor_store.FORMAT_VERSION or dtype_code != tensor_store.DTYPE_F32:
        raise tensor_store.UnsupportedVersionError(f"embedded record at offset {offset}")
    dims = struct.unpack_from(f"<{ndim}I", data, offset + 8)
    start = offset + 8 + 4 * ndim
    nbytes = int(np.prod(dims)) * 4
    if len(data) < start + nbytes:
        raise tensor_store.TruncatedPayloadError(f"embedded record at offset {offset}")
    arr = np.frombuffer(data[start : start + nbytes], dtype="<f4").reshape(dims).copy()
    return arr, start + nbytes


def load_checkpoint(path: str | Path, dtype=np.float32):
    """Rebuild (adapter, discriminator) from a CRMD file."""
    data = Path(path).read_bytes()
    if len(data) < 6 or data[:4] != CHECKPOINT_MAGIC:
        raise ModelError(f"{path}: not a model checkpoint")
    (version,) = struct.unpack_from("<H", data, 4)
    if version > CHECKPOINT_VERSION:
        raise ModelError(f"{path}: checkpoint version {version} unsupported")
    offset = 6
    tensors = []
    for _ in range(6):
        arr, offset = _read_crft_record(data, offset)
        tensors.append(arr.astype(dtype))
    aw, ab, w1, b1, w2, b2 = tensors
    rng = np.random.default_rng(0)
    adapter = AdapterNet(aw.shape[0], rng, dtype=dtype)
    adapter.set_params({"adapter.weight": aw, "adapter.bias": ab[0]})
    disc = DiscriminatorNet(w1.shape[1], w1.shape[0], rng, dtype=dtype)
    disc.set_params(
        {
            "disc.fc1.weight": w1,
            "disc.fc1.bias": b1[0],
            "disc.fc2.weight": w2,
            "disc.fc2.bias": b2[0],
        }
    )
    return adapter, disc


def finite_difference_gradients(loss_fn, params: dict[str, np.ndarray], step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central finite differences of ``loss_fn()`` wrt every entry of ``params``.

    Mutates each parameter in place around its original value; parameters must
    be float64 for the advertised accuracy.
    """
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            hi = loss_fn()
            p[idx] = orig - step
            lo = loss_fn()
            p[idx] = orig
            g[idx] = (hi - lo) / (2.0 * step)
            it.iternext()
        grads[name] = g
    return grads


def max_relative_error(analytic: dict[str, np.ndarray], reference: dict[str, np.ndarray]) -> float:
    """L-inf error between gradient vectors, relative to the reference scale."""
    num = 0.0
    scale = 0.0
    for name in reference:
        num = max(num, float(np.abs(analytic[name] - reference[name]).max()))
        scale = max(scale, float(np.abs(reference[name]).max()))
    return num / max(scale, 1e-300)
