"""Multi-class anomaly detection over feature tensors.

The engine trains a unified model across categories: adapted features are
compared against per-category contextual centers, anomalies are synthesized
by distance-guided Gaussian noise, and a small discriminator learns to
separate normal features (plus their center residuals) from synthetic ones.
"""

__version__ = "0.1.0"

from cras.tensor_store import read_tensor, write_tensor, load_manifest, write_manifest

__all__ = [
    "__version__",
    "read_tensor",
    "write_tensor",
    "load_manifest",
    "write_manifest",
]
