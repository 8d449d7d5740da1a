import numpy as np
import pytest

from v2vkfactor import io
from v2vkfactor.errors import FormatError
from v2vkfactor.kfactor import KFactorField
from v2vkfactor.subband import SubbandCir
from v2vkfactor.synth import ChannelTransferFunction


@pytest.fixture
def ctf(rng):
    s = (rng.standard_normal((7, 129)) + 1j * rng.standard_normal((7, 129))).astype(np.complex64)
    return ChannelTransferFunction(s)


@pytest.fixture
def cir(rng):
    h = (rng.standard_normal((9, 33, 3)) + 1j * rng.standard_normal((9, 33, 3))).astype(np.complex64)
    return SubbandCir(h, start_index=365, q_index=np.array([2, 5, 11]))


@pytest.fixture
def field():
    return KFactorField(
        k_db=np.array([[1.5, np.nan], [np.inf, -3.25]]),
        valid=np.array([[True, False], [True, True]]),
        centers=np.array([315, 378]),
        window=630, stride=63, t_s=307.2e-6,
        q_index=np.array([0, 1]), subband_freqs=np.array([5.49e9, 5.5e9]),
    )


def test_ctf_round_trip_is_byte_identical(tmp_path, ctf):
    a, b = tmp_path / "a.ctf", tmp_path / "b.ctf"
    io.write_ctf(a, ctf)
    back = io.read_ctf(a)
    np.testing.assert_array_equal(back.samples, ctf.samples)
    assert (back.t_s, back.f_s, back.carrier_freq) == (ctf.t_s, ctf.f_s, ctf.carrier_freq)
    io.write_ctf(b, back)
    assert a.read_bytes() == b.read_bytes()


def test_cir_round_trip_is_byte_identical(tmp_path, cir):
    a, b = tmp_path / "a.cir", tmp_path / "b.cir"
    io.write_cir(a, cir)
    back = io.read_cir(a)
    np.testing.assert_array_equal(back.h, cir.h)
    np.testing.assert_array_equal(back.q_index, cir.q_index)
    assert back.start_index == 365
    io.write_cir(b, back)
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("writer,reader,obj", [
    (io.write_ctf, io.read_ctf, "ctf"),
    (io.write_cir, io.read_cir, "cir"),
])
def test_truncated_and_bad_magic(tmp_path, request, writer, reader, obj):
    path = tmp_path / "x.bin"
    writer(path, request.getfixturevalue(obj))
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(FormatError):
        reader(path)
    path.write_bytes(raw[:10])
    with pytest.raises(FormatError):
        reader(path)
    path.write_bytes(b"NOTMAGIC" + raw[8:])
    with pytest.raises(FormatError):
        reader(path)


def test_reading_cir_as_ctf_fails(tmp_path, cir):
    path = tmp_path / "x.cir"
    io.write_cir(path, cir)
    with pytest.raises(FormatError):
        io.read_ctf(path)


def test_kfield_csv_round_trip(tmp_path, field):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    io.write_kfield_csv(a, field)
    cols = io.read_kfield_csv(a)
    assert len(cols["k_db"]) == 4
    np.testing.assert_array_equal(cols["valid"], [True, False, True, True])
    assert np.isnan(cols["k_db"][1]) and np.isposinf(cols["k_db"][2])
    np.testing.assert_array_equal(cols["subband_q"], [0, 1, 0, 1])
    io.write_kfield_columns(b, cols)
    assert a.read_bytes() == b.read_bytes()


def test_kfield_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(FormatError):
        io.read_kfield_csv(p)


def test_json_round_trip(tmp_path):
    obj = {"b": np.float64(1.25), "a": [np.int64(3), 0.1], "arr": np.arange(3)}
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    io.write_json(a, obj)
    io.write_json(b, io.read_json(a))
    assert a.read_bytes() == b.read_bytes()


def test_small_csv_exports(tmp_path, ctf, cir):
    io.ctf_to_csv(ChannelTransferFunction(ctf.samples[:2, :3]), tmp_path / "ctf.csv")
    lines = (tmp_path / "ctf.csv").read_text().splitlines()
    assert lines[0] == "m,b,re,im" and len(lines) == 7
    io.cir_abs_to_csv(cir.select([0]), tmp_path / "cir.csv")
    lines = (tmp_path / "cir.csv").read_text().splitlines()
    assert len(lines) == 1 + 9 * 33
    assert lines[1].startswith("365,0,2,")
