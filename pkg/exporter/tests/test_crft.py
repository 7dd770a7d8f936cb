import numpy as np
import pytest

from cras_exporter import crft


def test_roundtrip_float(tmp_path):
    t = np.random.default_rng(0).normal(size=(4, 3, 5)).astype(np.float32)
    crft.write(tmp_path / "t.crft", t)
    back = crft.read(tmp_path / "t.crft")
    assert back.tobytes() == t.tobytes()
    assert back.shape == (4, 3, 5)


def test_roundtrip_u8(tmp_path):
    m = (np.arange(16, dtype=np.uint8) % 3).reshape(4, 4)
    crft.write(tmp_path / "m.crft", m)
    assert np.array_equal(crft.read(tmp_path / "m.crft"), m)


def test_header_layout_matches_contract(tmp_path):
    crft.write(tmp_path / "z.crft", np.zeros((3, 2, 2), dtype=np.float32))
    data = (tmp_path / "z.crft").read_bytes()
    assert len(data) == 68
    assert data[:4] == b"CRFT"
    assert data[4:6] == (1).to_bytes(2, "little")  # version
    assert data[6] == 1 and data[7] == 3  # dtype f32, ndim
    assert data[8:12] == (3).to_bytes(4, "little")


def test_nan_rejected(tmp_path):
    t = np.zeros((2, 2), dtype=np.float32)
    t[1, 1] = np.nan
    with pytest.raises(crft.CrftError, match="flat index 3"):
        crft.write(tmp_path / "bad.crft", t)


def test_bad_magic_rejected(tmp_path):
    crft.write(tmp_path / "x.crft", np.zeros((2, 2), dtype=np.float32))
    raw = bytearray((tmp_path / "x.crft").read_bytes())
    raw[:4] = b"WHAT"
    (tmp_path / "x.crft").write_bytes(bytes(raw))
    with pytest.raises(crft.CrftError, match="magic"):
        crft.read(tmp_path / "x.crft")


def test_truncation_rejected(tmp_path):
    crft.write(tmp_path / "x.crft", np.zeros((2, 2), dtype=np.float32))
    data = (tmp_path / "x.crft").read_bytes()
    (tmp_path / "x.crft").write_bytes(data[:-2])
    with pytest.raises(crft.CrftError, match="length"):
        crft.read(tmp_path / "x.crft")
