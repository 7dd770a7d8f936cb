"""Shared fixture helpers: procedural texture images with drawn defects."""

from pathlib import Path

import numpy as np
from PIL import Image

_acceptance_results: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> None:
    _acceptance_results.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _acceptance_results:
        status = "PASS" if ok else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def texture(rng: np.random.Generator, kind: str, size: int) -> np.ndarray:
    """Category-specific base texture in [0, 255] uint8 RGB."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    if kind == "weave":
        base = 128 + 60 * np.sin(xx / 9.0) * np.cos(yy / 13.0)
    else:
        base = 110 + 70 * np.sin((xx + yy) / 17.0)
    base = base + rng.normal(0, 12, size=(size, size))
    img = np.clip(base, 0, 255).astype(np.uint8)
    return np.stack([img, np.clip(img * 0.9, 0, 255).astype(np.uint8), img], axis=-1)


def add_defect(rng: np.random.Generator, img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bright square blotch; returns (defective image, binary mask)."""
    size = img.shape[0]
    side = int(rng.integers(size // 6, size // 4))
    y = int(rng.integers(size // 8, size - side - size // 8))
    x = int(rng.integers(size // 8, size - side - size // 8))
    out = img.copy()
    out[y : y + side, x : x + side] = np.clip(
        out[y : y + side, x : x + side].astype(np.int32) + 120, 0, 255
    ).astype(np.uint8)
    mask = np.zeros((size, size), dtype=np.uint8)
    mask[y : y + side, x : x + side] = 255
    return out, mask


def make_image_dataset(
    root: Path,
    categories=("weave", "stripe"),
    n_train: int = 10,
    n_test_good: int = 4,
    n_test_defect: int = 4,
    size: int = 400,
    seed: int = 0,
) -> Path:
    rng = np.random.default_rng(seed)
    for kind in categories:
        (root / kind / "train" / "good").mkdir(parents=True, exist_ok=True)
        (root / kind / "test" / "good").mkdir(parents=True, exist_ok=True)
        (root / kind / "test" / "blotch").mkdir(parents=True, exist_ok=True)
        (root / kind / "ground_truth" / "blotch").mkdir(parents=True, exist_ok=True)
        for i in range(n_train):
            Image.fromarray(texture(rng, kind, size)).save(root / kind / "train" / "good" / f"{i:03d}.png")
        for i in range(n_test_good):
            Image.fromarray(texture(rng, kind, size)).save(root / kind / "test" / "good" / f"{i:03d}.png")
        for i in range(n_test_defect):
            img, mask = add_defect(rng, texture(rng, kind, size))
            Image.fromarray(img).save(root / kind / "test" / "blotch" / f"{i:03d}.png")
            Image.fromarray(mask).save(root / kind / "ground_truth" / "blotch" / f"{i:03d}_mask.png")
    return root
