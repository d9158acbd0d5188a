import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from weatherflow.io import (FLO_MAGIC, FormatError, read_flo, read_image, read_netpbm, read_pfm, write_flo,
                            write_image, write_netpbm, write_pfm)

finite32 = st.floats(allow_nan=False, width=32)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 9), st.integers(1, 9), st.just(2)), elements=finite32))
def test_flo_round_trip_bit_exact(tmp_path_factory, flow):
    path = tmp_path_factory.mktemp("flo") / "f.flo"
    write_flo(path, flow)
    back = read_flo(path)
    assert back.dtype == np.float32
    assert back.tobytes() == flow.tobytes()


def test_flo_layout(tmp_path):
    flow = np.arange(12, dtype=np.float32).reshape(2, 3, 2)
    write_flo(tmp_path / "a.flo", flow)
    raw = (tmp_path / "a.flo").read_bytes()
    assert struct.unpack("<fii", raw[:12]) == (FLO_MAGIC, 3, 2)
    assert struct.unpack("<4f", raw[12:28]) == (0.0, 1.0, 2.0, 3.0)


@pytest.mark.parametrize("raw, message", [
    (b"\x00" * 8, "truncated header"),
    (struct.pack("<fii", 1.0, 2, 2), "bad magic"),
    (struct.pack("<fii", FLO_MAGIC, 0, 5), "invalid dimensions"),
    (struct.pack("<fii", FLO_MAGIC, 2, 2) + b"\x00" * 16, "truncated payload"),
    (struct.pack("<fii", FLO_MAGIC, 1 << 16, 1 << 16), "overflow"),
])
def test_flo_rejects(tmp_path, raw, message):
    path = tmp_path / "bad.flo"
    path.write_bytes(raw)
    with pytest.raises(FormatError, match=message):
        read_flo(path)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float32, st.one_of(st.tuples(st.integers(1, 7), st.integers(1, 7)),
                                    st.tuples(st.integers(1, 7), st.integers(1, 7), st.just(3))),
              elements=finite32))
def test_pfm_round_trip_bit_exact(tmp_path_factory, img):
    path = tmp_path_factory.mktemp("pfm") / "x.pfm"
    write_pfm(path, img)
    assert read_pfm(path).tobytes() == img.tobytes()


def test_pfm_bottom_to_top(tmp_path):
    img = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    write_pfm(tmp_path / "a.pfm", img)
    raw = (tmp_path / "a.pfm").read_bytes()
    assert raw.startswith(b"Pf\n2 2\n-1.0\n")
    assert np.frombuffer(raw[-16:], "<f4").tolist() == [3.0, 4.0, 1.0, 2.0]


def test_pfm_big_endian_and_errors(tmp_path):
    path = tmp_path / "be.pfm"
    path.write_bytes(b"Pf\n1 2\n1.0\n" + np.array([5.0, 6.0], dtype=">f4").tobytes())
    assert read_pfm(path).ravel().tolist() == [6.0, 5.0]
    path.write_bytes(b"Pf\n2 2\n-1.0\n" + b"\x00" * 8)
    with pytest.raises(FormatError, match="truncated"):
        read_pfm(path)
    path.write_bytes(b"Pf\n0 2\n-1.0\n")
    with pytest.raises(FormatError):
        read_pfm(path)
    path.write_bytes(b"PX\n1 1\n-1.0\n\x00\x00\x00\x00")
    with pytest.raises(FormatError, match="magic"):
        read_pfm(path)


def test_netpbm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    gray = rng.integers(0, 256, size=(5, 7)) / 255.0
    rgb = rng.integers(0, 256, size=(4, 3, 3)) / 255.0
    write_netpbm(tmp_path / "g.pgm", gray)
    write_netpbm(tmp_path / "c.ppm", rgb)
    np.testing.assert_array_equal(read_netpbm(tmp_path / "g.pgm"), gray)
    np.testing.assert_array_equal(read_netpbm(tmp_path / "c.ppm"), rgb)
    assert (tmp_path / "g.pgm").read_bytes().startswith(b"P5\n7 5\n255\n")


def test_netpbm_comments_and_errors(tmp_path):
    path = tmp_path / "x.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n# max\n255\n\x00\xff")
    assert read_netpbm(path).tolist() == [[0.0, 1.0]]
    path.write_bytes(b"P5\n2 1\n65535\n" + b"\x00" * 4)
    with pytest.raises(FormatError, match="maxval"):
        read_netpbm(path)
    path.write_bytes(b"P5\n2 2\n255\n\x00")
    with pytest.raises(FormatError, match="truncated"):
        read_netpbm(path)
    path.write_bytes(b"P2\n2 1\n255\n0 0")
    with pytest.raises(FormatError, match="magic"):
        read_netpbm(path)
    path.write_bytes(b"P5\nxx\n")
    with pytest.raises(FormatError, match="malformed"):
        read_netpbm(path)


def test_dispatch(tmp_path):
    img = np.full((3, 3), 0.5, dtype=np.float32)
    write_image(tmp_path / "a.pfm", img)
    write_image(tmp_path / "a.pgm", img)
    assert read_image(tmp_path / "a.pfm").dtype == np.float32
    assert read_image(tmp_path / "a.pgm")[0, 0] == pytest.approx(128 / 255)
    (tmp_path / "junk").write_bytes(b"GIF89a")
    with pytest.raises(FormatError):
        read_image(tmp_path / "junk")
    with pytest.raises(ValueError):
        write_netpbm(tmp_path / "bad.pgm", np.zeros((2, 2, 2)))
