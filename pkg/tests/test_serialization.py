import numpy as np
import pytest

from heis_besov import serialization as ser


@pytest.mark.parametrize("arr", [np.arange(24.0).reshape(2, 3, 4),
                                 (np.arange(6) + 1j * np.arange(6)[::-1]).reshape(3, 2),
                                 np.array(3.5)])
def test_hbsf_roundtrip(arr, tmp_path):
    meta = {"b": 1, "a": [1.0, 2.0]}
    ser.write_hbsf(tmp_path / "x.hbsf", arr, meta)
    back, m = ser.read_hbsf(tmp_path / "x.hbsf")
    assert back.dtype == (np.complex128 if np.iscomplexobj(arr) else np.float64)
    assert back.shape == arr.shape and np.array_equal(back, arr)
    assert m == meta


def test_hbsf_layout_and_errors():
    data = ser.to_hbsf(np.zeros((2, 2)), {})
    assert data[:4] == b"HBSF"
    assert len(data) == 4 + 12 + 16 + 4 + 2 + 32  # header, dims, meta length, "{}", payload
    with pytest.raises(ValueError, match="magic"):
        ser.from_hbsf(b"XXXX" + data[4:])
    with pytest.raises(ValueError, match="size"):
        ser.from_hbsf(data[:-8])
    bad = bytearray(data)
    bad[8] = 7
    with pytest.raises(ValueError, match="dtype"):
        ser.from_hbsf(bytes(bad))


def test_hbsf_is_deterministic():
    a = np.linspace(0, 1, 7)
    assert ser.to_hbsf(a, {"z": 1, "a": 2}) == ser.to_hbsf(a.copy(), {"a": 2, "z": 1})


def test_canonical_json():
    s = ser.canonical_json({"b": np.float64(np.nan), "a": [np.inf, -np.inf, np.int64(3), np.bool_(True)],
                            "c": np.arange(2.0)})
    assert s.index('"a"') < s.index('"b"') < s.index('"c"')
    assert '"nan"' in s and '"inf"' in s and '"-inf"' in s
    assert "NaN" not in s and "Infinity" not in s


def test_csv(tmp_path):
    txt = ser.to_csv(["t", "v"], [(0.1, 1), (np.float64(0.2), "x")])
    assert txt == "t,v\n0.1,1\n0.2,x\n"
    ser.write_csv(tmp_path / "a.csv", ["t"], [(1.0,)])
    assert (tmp_path / "a.csv").read_text() == "t\n1.0\n"


@pytest.mark.parametrize("arr", [np.arange(6.0).reshape(2, 3), np.array([1 + 2j, -3j]), np.array(2.0)])
def test_json_array_roundtrip(arr, tmp_path):
    d = ser.to_json_array(arr, {"k": 1})
    (tmp_path / "a.json").write_text(ser.canonical_json(d))
    back, meta = ser.read_array(tmp_path / "a.json")
    assert back.shape == arr.shape and np.array_equal(back, arr) and meta == {"k": 1}
    ser.write_hbsf(tmp_path / "a.hbsf", arr)
    assert np.array_equal(ser.read_array(tmp_path / "a.hbsf")[0], arr)


def test_json_array_errors():
    with pytest.raises(ValueError):
        ser.from_json_array({"format": "other"})
    d = ser.to_json_array(np.zeros(4))
    d["real"] = d["real"][:3]
    with pytest.raises(ValueError, match="size"):
        ser.from_json_array(d)
