import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from itcircles.imageio import read_image, to_uint8, write_accumulator, write_image, write_pgm


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_pgm_round_trip_is_bit_exact(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("pgm") / "x.pgm"
    write_image(path, data / 255.0)
    raw = path.read_bytes()
    h, w = data.shape
    header = f"P5\n{w} {h}\n255\n".encode()
    assert raw == header + data.tobytes()
    np.testing.assert_array_equal(to_uint8(read_image(path)), data)


def test_quantization_rounds_to_nearest():
    img = np.array([[0.0, 0.5 / 255, 0.49 / 255, 1.0, 127.5 / 255]])
    np.testing.assert_array_equal(to_uint8(img), [[0, 1, 0, 255, 128]])


def test_png_round_trip(tmp_path):
    data = np.arange(64, dtype=np.uint8).reshape(8, 8) * 4
    write_image(tmp_path / "a.png", data / 255.0)
    np.testing.assert_array_equal(to_uint8(read_image(tmp_path / "a.png")), data)


def test_color_png_uses_luminance(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    Image.fromarray(rgb, "RGB").save(tmp_path / "red.png")
    assert read_image(tmp_path / "red.png") == pytest.approx(np.full((2, 2), 0.299))


def test_missing_and_bad_files(tmp_path):
    with pytest.raises(OSError):
        read_image(tmp_path / "none.pgm")
    (tmp_path / "junk.pgm").write_bytes(b"not an image")
    with pytest.raises(OSError):
        read_image(tmp_path / "junk.pgm")
    with pytest.raises(OSError):
        write_image(tmp_path / "x.bmp", np.zeros((2, 2)))


def test_accumulator_scaling(tmp_path):
    votes = np.array([[0.0, 1.0], [2.0, 4.0]])
    write_accumulator(tmp_path / "acc.pgm", votes)
    np.testing.assert_array_equal(to_uint8(read_image(tmp_path / "acc.pgm")), [[0, 64], [128, 255]])
    write_accumulator(tmp_path / "zero.pgm", np.zeros((2, 2)))
    assert not read_image(tmp_path / "zero.pgm").any()


def test_write_pgm_header(tmp_path):
    write_pgm(tmp_path / "h.pgm", np.zeros((3, 5), np.uint8))
    assert (tmp_path / "h.pgm").read_bytes().startswith(b"P5\n5 3\n255\n")
