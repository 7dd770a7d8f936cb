import json

import numpy as np
import pytest

from conftest import make_image_dataset
from cras_exporter import crft
from cras_exporter.export import ExportConfig, ExportError, export, scan_dataset, verify_export


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("images")
    return make_image_dataset(root, n_train=2, n_test_good=1, n_test_defect=1, size=96, seed=1)


@pytest.fixture(scope="module")
def small_export(small_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("export")
    cfg = ExportConfig(
        root=str(small_dataset),
        out_dir=str(out),
        backbone="resnet18",
        weights="random",
        resize=96,
        crop=64,
        seed=7,
    )
    return cfg, export(cfg)


class TestConfig:
    def test_crop_exceeding_resize_rejected(self):
        with pytest.raises(ExportError):
            ExportConfig(root="x", out_dir="y", resize=100, crop=200)

    def test_unknown_backbone_rejected(self):
        with pytest.raises(ExportError):
            ExportConfig(root="x", out_dir="y", backbone="vgg-nope")

    def test_bad_level_rejected(self):
        with pytest.raises(ExportError):
            ExportConfig(root="x", out_dir="y", levels=(5,))


class TestScan:
    def test_finds_all_samples(self, small_dataset):
        records = scan_dataset(small_dataset)
        assert len(records) == 2 * (2 + 1 + 1)
        cats = {r.category for r in records}
        assert cats == {"weave", "stripe"}
        anomalous = [r for r in records if r.label == "anomalous"]
        assert all(r.mask_path is not None for r in anomalous)

    def test_missing_root(self):
        with pytest.raises(ExportError, match="root"):
            scan_dataset("/nonexistent/nowhere")

    def test_missing_mask_rejected(self, tmp_path):
        make_image_dataset(tmp_path, categories=("solo",), n_train=1, n_test_good=0,
                           n_test_defect=1, size=64, seed=2)
        mask = next((tmp_path / "solo" / "ground_truth" / "blotch").glob("*.png"))
        mask.unlink()
        with pytest.raises(ExportError, match="mask"):
            scan_dataset(tmp_path)


class TestExport:
    def test_manifest_and_files(self, small_export):
        cfg, manifest_path = small_export
        assert manifest_path.exists()
        lines = manifest_path.read_text().splitlines()
        assert json.loads(lines[0]) == {"manifest_version": 1}
        rows = [json.loads(l) for l in lines[1:]]
        assert len(rows) == 8 * 2  # one row per (sample, level)
        assert {r["level"] for r in rows} == {2, 3}

    def test_feature_shapes_are_architecture_determined(self, small_export):
        cfg, manifest_path = small_export
        rows = [json.loads(l) for l in manifest_path.read_text().splitlines()[1:]]
        root = manifest_path.parent
        for row in rows:
            feat = crft.read(root / row["path"])
            # resnet18 at 64 px input: level2 128x8x8, level3 256x4x4
            expected = {2: (128, 8, 8), 3: (256, 4, 4)}[row["level"]]
            assert feat.shape == expected

    def test_test_entries_have_masks_with_crop_dims(self, small_export):
        cfg, manifest_path = small_export
        rows = [json.loads(l) for l in manifest_path.read_text().splitlines()[1:]]
        root = manifest_path.parent
        for row in rows:
            if row["split"] == "test":
                mask = crft.read(root / row["mask_path"])
                assert mask.shape == (64, 64)
                assert mask.dtype == np.uint8
                if row["label"] == "normal":
                    assert not mask.any()
                else:
                    assert mask.any()
            else:
                assert "mask_path" not in row

    def test_export_config_written(self, small_export):
        cfg, manifest_path = small_export
        resolved = json.loads((manifest_path.parent / "export_config.json").read_text())
        assert resolved["backbone"] == "resnet18"
        assert resolved["weights"] == "random"

    def test_reexport_identical(self, small_dataset, small_export, tmp_path):
        cfg, manifest_path = small_export
        cfg2 = ExportConfig(
            root=str(small_dataset), out_dir=str(tmp_path / "again"), backbone="resnet18",
            weights="random", resize=96, crop=64, seed=7,
        )
        manifest2 = export(cfg2)
        rows1 = manifest_path.read_text().splitlines()[1:]
        rows2 = manifest2.read_text().splitlines()[1:]
        assert rows1 == rows2
        for line in rows2:
            row = json.loads(line)
            a = crft.read(manifest_path.parent / row["path"])
            b = crft.read(manifest2.parent / row["path"])
            assert np.abs(a - b).max() <= 1e-5


class TestVerify:
    def test_intact_export_passes(self, small_export):
        _, manifest_path = small_export
        report = verify_export(manifest_path)
        assert report.ok, report.summary()
        assert report.n_files > 0

    def test_corrupted_file_named(self, small_dataset, tmp_path):
        cfg = ExportConfig(
            root=str(small_dataset), out_dir=str(tmp_path / "x"), backbone="resnet18",
            weights="random", resize=96, crop=64,
        )
        manifest_path = export(cfg)
        victim = next((tmp_path / "x" / "feats").glob("*.crft"))
        victim.write_bytes(victim.read_bytes()[:-4])
        report = verify_export(manifest_path)
        assert not report.ok
        assert any(victim.name in p for p in report.problems)

    def test_missing_manifest_fails(self, tmp_path):
        report = verify_export(tmp_path / "nope.jsonl")
        assert not report.ok
