"""Image-to-feature export through a frozen classification backbone.

Dataset layout (one directory per category, MVTec-style):

    root/<category>/train/good/*.png
    root/<category>/test/good/*.png
    root/<category>/test/<defect>/*.png          any name but "good" is anomalous
    root/<category>/ground_truth/<defect>/<stem>_mask.png

Images are squashed to resize x resize, center-cropped, normalized with the
backbone's training statistics, and pushed through the frozen network; the
requested hierarchy levels are dumped as float CRFT files. Masks follow the
same geometry with nearest-neighbor resampling; normal test images get an
all-zero mask so pixel metrics can pool over the full split.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import models

from cras_exporter import crft

log = logging.getLogger(__name__)

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}
MANIFEST_VERSION = 1

_BACKBONES = {
    "wide_resnet50_2": (models.wide_resnet50_2, "Wide_ResNet50_2_Weights"),
    "resnet50": (models.resnet50, "ResNet50_Weights"),
    "resnet18": (models.resnet18, "ResNet18_Weights"),
}


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class ExportConfig:
    root: str
    out_dir: str
    backbone: str = "wide_resnet50_2"
    levels: tuple[int, ...] = (2, 3)
    resize: int = 329
    crop: int = 288
    weights: str = "pretrained"  # or "random" (seeded; offline fallback)
    seed: int = 0
    batch_size: int = 4

    def __post_init__(self):
        if self.crop > self.resize:
            raise ExportError(f"crop {self.crop} > resize {self.resize}")
        if self.backbone not in _BACKBONES:
            raise ExportError(f"unknown backbone {self.backbone!r} (have {sorted(_BACKBONES)})")
        if not self.levels or any(lv not in (1, 2, 3, 4) for lv in self.levels):
            raise ExportError(f"levels must be within 1..4, got {self.levels}")
        if self.weights not in ("pretrained", "random"):
            raise ExportError(f"weights must be 'pretrained' or 'random', got {self.weights!r}")


@dataclass
class SampleRecord:
    category: str
    split: str
    label: str
    sample_id: str
    image_path: Path
    mask_path: Path | None


def scan_dataset(root: str | Path) -> list[SampleRecord]:
    root = Path(root)
    if not root.is_dir():
        raise ExportError(f"dataset root not found: {root}")
    records: list[SampleRecord] = []
    for cat_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        category = cat_dir.name
        for split in ("train", "test"):
            split_dir = cat_dir / split
            if not split_dir.is_dir():
                continue
            for sub in sorted(p for p in split_dir.iterdir() if p.is_dir()):
                label = "normal" if sub.name == "good" else "anomalous"
                if split == "train" and label != "normal":
                    raise ExportError(f"{sub}: train split must contain only good/")
                for img in sorted(p for p in sub.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES):
                    mask = None
                    if label == "anomalous":
                        mask = cat_dir / "ground_truth" / sub.name / f"{img.stem}_mask.png"
                        if not mask.exists():
                            raise ExportError(f"missing mask for anomalous sample: {mask}")
                    records.append(
                        SampleRecord(
                            category=category,
                            split=split,
                            label=label,
                            sample_id=f"{category}_{split}_{sub.name}_{img.stem}",
                            image_path=img,
                            mask_path=mask,
                        )
                    )
    if not records:
        raise ExportError(f"no images found under {root}")
    return records


def load_backbone(cfg: ExportConfig) -> torch.nn.Module:
    ctor, weights_enum_name = _BACKBONES[cfg.backbone]
    if cfg.weights == "pretrained":
        weights_enum = getattr(models, weights_enum_name)
        try:
            model = ctor(weights=weights_enum.IMAGENET1K_V1)
        except Exception as exc:
            raise ExportError(
                f"could not load pretrained weights for {cfg.backbone} "
                f"(offline?): {exc}; rerun with weights='random' for a seeded untrained backbone"
            ) from exc
    else:
        torch.manual_seed(cfg.seed)
        model = ctor(weights=None)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def _preprocess_image(path: Path, resize: int, crop: int) -> torch.Tensor:
    img = Image.open(path).convert("RGB").resize((resize, resize), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    off = (resize - crop) // 2
    arr = arr[off : off + crop, off : off + crop]
    arr = (arr - np.asarray(IMAGENET_MEAN, dtype=np.float32)) / np.asarray(
        IMAGENET_STD, dtype=np.float32
    )
    return torch.from_numpy(arr.transpose(2, 0, 1))


def _preprocess_mask(path: Path | None, resize: int, crop: int) -> np.ndarray:
    if path is None:
        return np.zeros((crop, crop), dtype=np.uint8)
    img = Image.open(path).convert("L").resize((resize, resize), Image.NEAREST)
    arr = np.asarray(img, dtype=np.uint8)
    off = (resize - crop) // 2
    arr = arr[off : off + crop, off : off + crop]
    return np.where(arr > 0, np.uint8(255), np.uint8(0))


def export(cfg: ExportConfig) -> Path:
    """Run the backbone over the dataset; returns the manifest path."""
    records = scan_dataset(cfg.root)
    model = load_backbone(cfg)

    captured: dict[int, torch.Tensor] = {}
    hooks = []
    for level in cfg.levels:
        layer = getattr(model, f"layer{level}")

        def hook(mod, inputs, output, level=level):
            captured[level] = output

        hooks.append(layer.register_forward_hook(hook))

    out_dir = Path(cfg.out_dir)
    (out_dir / "feats").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)

    manifest_rows: list[dict] = []
    with torch.no_grad():
        for start in range(0, len(records), cfg.batch_size):
            batch = records[start : start + cfg.batch_size]
            pixels = torch.stack(
                [_preprocess_image(r.image_path, cfg.resize, cfg.crop) for r in batch]
            )
            captured.clear()
            model(pixels)
            for i, rec in enumerate(batch):
                mask_rel = None
                if rec.split == "test":
                    mask_rel = f"masks/{rec.sample_id}.crft"
                    crft.write(out_dir / mask_rel, _preprocess_mask(rec.mask_path, cfg.resize, cfg.crop))
                for level in cfg.levels:
                    feat = captured[level][i].numpy().astype(np.float32)
                    rel = f"feats/{rec.sample_id}_l{level}.crft"
                    crft.write(out_dir / rel, feat)
                    row = {
                        "path": rel,
                        "category": rec.category,
                        "sample_id": rec.sample_id,
                        "split": rec.split,
                        "label": rec.label,
                        "level": level,
                    }
                    if mask_rel is not None:
                        row["mask_path"] = mask_rel
                    manifest_rows.append(row)
            log.info("exported %d/%d images", min(start + cfg.batch_size, len(records)), len(records))
    for h in hooks:
        h.remove()

    manifest_path = out_dir / "manifest.jsonl"
    with manifest_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"manifest_version": MANIFEST_VERSION}) + "\n")
        for row in manifest_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (out_dir / "export_config.json").write_text(
        json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest_path


@dataclass
class VerifyReport:
    ok: bool
    n_files: int = 0
    problems: list[str] = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        lines = [f"{status}: {self.n_files} files checked"]
        lines += [f"  - {p}" for p in self.problems]
        return "\n".join(lines)


def verify_export(manifest_path: str | Path) -> VerifyReport:
    """Re-parse every emitted file and check shape uniformity per level."""
    manifest_path = Path(manifest_path)
    report = VerifyReport(ok=True)
    if not manifest_path.exists():
        return VerifyReport(ok=False, problems=[f"manifest not found: {manifest_path}"])
    root = manifest_path.parent
    lines = manifest_path.read_text(encoding="utf-8").splitlines()
    if not lines or json.loads(lines[0]).get("manifest_version") != MANIFEST_VERSION:
        return VerifyReport(ok=False, problems=["missing or wrong manifest_version header"])

    shapes_by_level: dict[int, set[tuple[int, ...]]] = {}
    categories: dict[str, int] = {}
    for line in lines[1:]:
        row = json.loads(line)
        categories[row["category"]] = categories.get(row["category"], 0) + 1
        for key in ("path", "mask_path"):
            rel = row.get(key)
            if rel is None:
                continue
            try:
                arr = crft.read(root / rel)
                report.n_files += 1
            except (OSError, crft.CrftError) as exc:
                report.ok = False
                report.problems.append(f"{rel}: {exc}")
                continue
            if key == "path":
                shapes_by_level.setdefault(row["level"], set()).add(arr.shape)
            elif arr.ndim != 2 or arr.dtype != np.uint8:
                report.ok = False
                report.problems.append(f"{rel}: mask must be 2-D uint8, got {arr.dtype} {arr.shape}")

    for level, shapes in sorted(shapes_by_level.items()):
        if len(shapes) > 1:
            report.ok = False
            report.problems.append(f"level {level}: non-uniform shapes {sorted(shapes)}")
    for cat, count in categories.items():
        if count == 0:
            report.ok = False
            report.problems.append(f"category {cat} is empty")
    if not categories:
        report.ok = False
        report.problems.append("no categories in manifest")
    return report
