import numpy as np
import pytest
from PIL import Image

from inwdt.image import (
    ImageBuffer,
    ImageFormatError,
    load_image,
    pixel_at,
    save_image,
)


def _write_png(path, arr):
    Image.fromarray(np.asarray(arr, dtype=np.uint8), "RGB").save(path, format="PNG")


def test_load_solid_red_2x2(tmp_path):
    p = tmp_path / "red.png"
    _write_png(p, np.full((2, 2, 3), (255, 0, 0), dtype=np.uint8))
    buf = load_image(p)
    assert buf.data.shape == (2, 2, 3)
    assert np.array_equal(buf.data, np.broadcast_to([255.0, 0.0, 0.0], (2, 2, 3)))


def test_load_1x1_black(tmp_path):
    p = tmp_path / "black.png"
    _write_png(p, np.zeros((1, 1, 3), dtype=np.uint8))
    buf = load_image(p)
    assert buf.width == 1 and buf.height == 1
    assert np.array_equal(buf.data[0, 0], [0.0, 0.0, 0.0])


def test_load_jpeg(tmp_path):
    p = tmp_path / "img.jpg"
    arr = np.full((8, 8, 3), 100, dtype=np.uint8)
    Image.fromarray(arr, "RGB").save(p, format="JPEG", quality=95)
    buf = load_image(p)
    assert buf.data.shape == (8, 8, 3)


def test_save_load_roundtrip_is_byte_stable(tmp_path, rng):
    arr = rng.integers(0, 256, size=(13, 9, 3), dtype=np.uint8)
    p1 = tmp_path / "a.png"
    p2 = tmp_path / "b.png"
    save_image(ImageBuffer(arr.astype(np.float64)), p1)
    loaded = load_image(p1)
    assert np.array_equal(loaded.quantized(), arr)
    save_image(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_image("/nonexistent/nowhere.png")


def test_non_image_bytes_rejected(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"this is not a png at all")
    with pytest.raises(ImageFormatError):
        load_image(p)


def test_alpha_rejected(tmp_path):
    p = tmp_path / "rgba.png"
    Image.fromarray(np.zeros((4, 4, 4), dtype=np.uint8), "RGBA").save(p, format="PNG")
    with pytest.raises(ImageFormatError, match="alpha"):
        load_image(p)


def test_grayscale_rejected(tmp_path):
    p = tmp_path / "gray.png"
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8), "L").save(p, format="PNG")
    with pytest.raises(ImageFormatError):
        load_image(p)


def test_foreign_container_rejected(tmp_path):
    p = tmp_path / "img.gif"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8), "RGB").save(p, format="GIF")
    with pytest.raises(ImageFormatError, match="container"):
        load_image(p)


def test_quantize_clamps_and_rounds_half_away():
    vals = np.array([[[-3.0, 255.7, 127.5]], [[126.5, 0.5, -0.49]]])
    buf = ImageBuffer(vals)
    q = buf.quantized()
    assert q.dtype == np.uint8
    assert list(q[0, 0]) == [0, 255, 128]
    assert list(q[1, 0]) == [127, 1, 0]


def test_quantized_matches_scalar_rule(rng):
    data = rng.uniform(-20, 275, size=(6, 5, 3))
    q = ImageBuffer(data).quantized()
    for idx in np.ndindex(data.shape):
        t = min(max(data[idx], 0.0), 255.0)
        assert q[idx] == int(np.floor(t + 0.5))


def test_pixel_at_replicates_out_of_range(rng):
    data = rng.uniform(0, 255, size=(3, 4, 3))
    buf = ImageBuffer(data)
    assert np.array_equal(pixel_at(buf, -1, -1), data[0, 0])
    assert np.array_equal(pixel_at(buf, 4, 1), data[1, 3])
    assert np.array_equal(pixel_at(buf, 2, 99), data[2, 2])
    assert np.array_equal(pixel_at(buf, 1, 2), data[2, 1])


def test_buffer_validation():
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((0, 4, 3)))
    bad = np.zeros((2, 2, 3))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        ImageBuffer(bad)


def test_buffer_is_read_only():
    buf = ImageBuffer(np.zeros((2, 2, 3)))
    with pytest.raises(ValueError):
        buf.data[0, 0, 0] = 1.0
