"""Feature exporter: runs a frozen pretrained backbone over an image dataset
and dumps per-level feature maps, masks, and a manifest in the engine's wire
formats (CRFT tensors, JSON-lines manifest)."""

__version__ = "0.1.0"
