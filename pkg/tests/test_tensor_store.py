import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cras import tensor_store as ts


def test_header_arithmetic_3x2x2_zeros(tmp_path):
    path = tmp_path / "z.crft"
    ts.write_tensor(path, np.zeros((3, 2, 2), dtype=np.float32))
    assert path.stat().st_size == 4 + 2 + 1 + 1 + 12 + 48


def test_roundtrip_identity(tmp_path):
    rng = np.random.default_rng(0)
    t = rng.normal(size=(5, 4, 3)).astype(np.float32)
    path = tmp_path / "t.crft"
    ts.write_tensor(path, t)
    back = ts.read_tensor(path)
    assert back.dtype == np.float32
    assert back.shape == (5, 4, 3)
    assert np.array_equal(back, t)


def test_u8_mask_roundtrip(tmp_path):
    mask = (np.arange(12, dtype=np.uint8) % 2).reshape(3, 4)
    path = tmp_path / "m.crft"
    ts.write_tensor(path, mask)
    assert np.array_equal(ts.read_tensor(path), mask)


def test_nan_rejected_with_flat_index(tmp_path):
    t = np.zeros((2, 2, 2), dtype=np.float32)
    t[1, 0, 1] = np.nan
    with pytest.raises(ts.NonFiniteValueError, match="flat index 5"):
        ts.write_tensor(tmp_path / "bad.crft", t)


def test_inf_rejected(tmp_path):
    t = np.zeros((2, 2), dtype=np.float32)
    t[0, 1] = np.inf
    with pytest.raises(ts.NonFiniteValueError, match="flat index 1"):
        ts.write_tensor(tmp_path / "bad.crft", t)


def test_zero_dim_rejected(tmp_path):
    with pytest.raises(ts.TensorStoreError, match="nonzero"):
        ts.write_tensor(tmp_path / "e.crft", np.zeros((0, 2), dtype=np.float32))


def test_1d_rejected(tmp_path):
    with pytest.raises(ts.TensorStoreError, match="ndim"):
        ts.write_tensor(tmp_path / "e.crft", np.zeros(4, dtype=np.float32))


def test_bad_magic(tmp_path):
    path = tmp_path / "x.crft"
    ts.write_tensor(path, np.zeros((2, 2), dtype=np.float32))
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(ts.BadMagicError):
        ts.read_tensor(path)


def test_future_version_rejected(tmp_path):
    path = tmp_path / "x.crft"
    ts.write_tensor(path, np.zeros((2, 2), dtype=np.float32))
    data = bytearray(path.read_bytes())
    data[4:6] = (2).to_bytes(2, "little")
    path.write_bytes(bytes(data))
    with pytest.raises(ts.UnsupportedVersionError):
        ts.read_tensor(path)


def test_truncated_by_one_byte(tmp_path):
    path = tmp_path / "x.crft"
    ts.write_tensor(path, np.zeros((2, 2), dtype=np.float32))
    data = path.read_bytes()
    path.write_bytes(data[:-1])
    with pytest.raises(ts.TruncatedPayloadError):
        ts.read_tensor(path)


def test_trailing_garbage_rejected(tmp_path):
    path = tmp_path / "x.crft"
    ts.write_tensor(path, np.zeros((2, 2), dtype=np.float32))
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(ts.TruncatedPayloadError):
        ts.read_tensor(path)


@settings(max_examples=50, deadline=None)
@given(
    arrays(
        dtype=np.float32,
        shape=st.tuples(st.integers(1, 4), st.integers(1, 5), st.integers(1, 5)),
        elements=st.floats(-1e6, 1e6, width=32, allow_nan=False, allow_infinity=False),
    )
)
def test_roundtrip_bit_exact_property(tmp_path_factory, t):
    path = tmp_path_factory.mktemp("rt") / "t.crft"
    ts.write_tensor(path, t)
    back = ts.read_tensor(path)
    assert back.tobytes() == t.astype("<f4").tobytes()


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        for ln in lines:
            fh.write(ln + "\n")


HEADER = '{"manifest_version": 1}'


def test_manifest_roundtrip_and_category_order(tmp_path):
    entries = [
        ts.ManifestEntry("b/t1.crft", "b", "t1", "train", "normal"),
        ts.ManifestEntry("a/t2.crft", "a", "t2", "train", "normal"),
        ts.ManifestEntry("a/x.crft", "a", "x", "test", "anomalous", mask_path="a/x_mask.crft"),
    ]
    mp = tmp_path / "manifest.jsonl"
    ts.write_manifest(mp, entries)
    m = ts.load_manifest(mp)
    assert m.categories == ["a", "b"]
    assert len(m.entries) == 3
    assert m.root == tmp_path


def test_category_order_independent_of_record_order(tmp_path):
    recs = [
        '{"path": "p%d.crft", "category": "%s", "sample_id": "s%d", "split": "train", "label": "normal"}'
        % (i, c, i)
        for i, c in enumerate(["zz", "m", "aa", "k", "m"])
    ]
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [HEADER] + recs)
    assert ts.load_manifest(mp).categories == ["aa", "k", "m", "zz"]
    _write_lines(mp, [HEADER] + recs[::-1])
    recs_rev = ts.load_manifest(mp).categories
    assert recs_rev == ["aa", "k", "m", "zz"]


def test_manifest_15_categories_lexicographic(tmp_path):
    cats = [f"cat{i:02d}" for i in range(15)][::-1]
    recs = [
        '{"path": "p%d.crft", "category": "%s", "sample_id": "s%d", "split": "train", "label": "normal"}'
        % (i, c, i)
        for i, c in enumerate(cats)
    ]
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [HEADER] + recs)
    assert ts.load_manifest(mp).categories == sorted(cats)


def test_manifest_duplicate_path_rejected(tmp_path):
    rec = '{"path": "p.crft", "category": "a", "sample_id": "s", "split": "train", "label": "normal"}'
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [HEADER, rec, rec.replace('"s"', '"s2"')])
    with pytest.raises(ts.ManifestError, match="duplicate"):
        ts.load_manifest(mp)


def test_anomalous_train_rejected(tmp_path):
    rec = (
        '{"path": "p.crft", "category": "a", "sample_id": "s", "split": "train",'
        ' "label": "anomalous", "mask_path": "m.crft"}'
    )
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [HEADER, rec])
    with pytest.raises(ts.ManifestError, match="train"):
        ts.load_manifest(mp)


def test_train_entry_with_mask_rejected(tmp_path):
    rec = (
        '{"path": "p.crft", "category": "a", "sample_id": "s", "split": "train",'
        ' "label": "normal", "mask_path": "m.crft"}'
    )
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [HEADER, rec])
    with pytest.raises(ts.ManifestError, match="no masks"):
        ts.load_manifest(mp)


def test_anomalous_without_mask_rejected(tmp_path):
    rec = '{"path": "p.crft", "category": "a", "sample_id": "s", "split": "test", "label": "anomalous"}'
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [HEADER, rec])
    with pytest.raises(ts.ManifestError, match="mask"):
        ts.load_manifest(mp)


def test_missing_version_header_rejected(tmp_path):
    rec = '{"path": "p.crft", "category": "a", "sample_id": "s", "split": "train", "label": "normal"}'
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [rec])
    with pytest.raises(ts.ManifestError, match="manifest_version"):
        ts.load_manifest(mp)


def test_eager_validation_missing_file(tmp_path):
    rec = '{"path": "p.crft", "category": "a", "sample_id": "s", "split": "train", "label": "normal"}'
    mp = tmp_path / "m.jsonl"
    _write_lines(mp, [HEADER, rec])
    with pytest.raises(ts.ManifestError, match="missing file"):
        ts.load_manifest(mp, eager=True)
    ts.write_tensor(tmp_path / "p.crft", np.zeros((1, 1), dtype=np.float32))
    assert ts.load_manifest(mp, eager=True).entries[0].sample_id == "s"
