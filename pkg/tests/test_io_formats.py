import numpy as np
import pytest

from cogrip.errors import FormatError
from cogrip.io_formats import read_fmap, read_fvec, write_fmap, write_fvec


def test_fvec_round_trip(tmp_path):
    path = tmp_path / "a.fvec"
    values = np.array([1.5, -2.0, 0.25], dtype=np.float32)
    write_fvec(path, values)
    np.testing.assert_array_equal(read_fvec(path), values)


def test_fvec_header_layout(tmp_path):
    path = tmp_path / "a.fvec"
    write_fvec(path, [1.0, 2.0])
    raw = path.read_bytes()
    assert raw[:4] == b"FVEC"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:12], "little") == 2
    assert len(raw) == 12 + 8


def test_fvec_bad_magic(tmp_path):
    path = tmp_path / "bad.fvec"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(FormatError):
        read_fvec(path)


def test_fvec_truncated(tmp_path):
    path = tmp_path / "t.fvec"
    write_fvec(path, [1.0, 2.0, 3.0])
    path.write_bytes(path.read_bytes()[:-2])
    with pytest.raises(FormatError):
        read_fvec(path)


def test_fmap_round_trip(tmp_path):
    path = tmp_path / "m.fmap"
    data = np.arange(2 * 3 * 4, dtype=np.float32).reshape(2, 3, 4)
    write_fmap(path, data)
    out = read_fmap(path)
    assert out.shape == (2, 3, 4)
    np.testing.assert_array_equal(out, data)


def test_fmap_header_layout(tmp_path):
    path = tmp_path / "m.fmap"
    write_fmap(path, np.zeros((5, 7, 2), dtype=np.float32))
    raw = path.read_bytes()
    assert raw[:4] == b"FMAP"
    assert [int.from_bytes(raw[o : o + 4], "little") for o in (4, 8, 12, 16)] == [1, 5, 7, 2]


def test_fmap_wrong_length(tmp_path):
    path = tmp_path / "m.fmap"
    write_fmap(path, np.zeros((2, 2, 2), dtype=np.float32))
    path.write_bytes(path.read_bytes() + b"\x00\x00")
    with pytest.raises(FormatError):
        read_fmap(path)


def test_fmap_rejects_bad_shape(tmp_path):
    with pytest.raises(FormatError):
        write_fmap(tmp_path / "m.fmap", np.zeros((2, 2)))
