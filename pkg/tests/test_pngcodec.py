import io

import numpy as np
import pytest
from PIL import Image

from facegen.pngcodec import decode_png, encode_png
from facegen.types import FaceImage


def _noise_image(seed=0, size=64):
    rng = np.random.default_rng(seed)
    return FaceImage.from_array(rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8))


def test_round_trip_own_codec():
    img = _noise_image()
    assert decode_png(encode_png(img)).pixels == img.pixels


def test_pillow_decodes_our_output():
    img = _noise_image(seed=1)
    with Image.open(io.BytesIO(encode_png(img))) as pil:
        pil.load()
        assert pil.size == (64, 64)
        assert pil.mode == "RGB"
        assert pil.tobytes() == img.pixels


def test_we_decode_pillow_output():
    arr = np.random.default_rng(2).integers(0, 256, size=(32, 48, 3), dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, "RGB").save(buf, format="PNG")
    img = decode_png(buf.getvalue())
    assert (img.height, img.width) == (32, 48)
    assert img.to_array().tobytes() == arr.tobytes()


def test_encoding_deterministic():
    img = _noise_image(seed=3)
    assert encode_png(img) == encode_png(img)


def test_rejects_non_png():
    with pytest.raises(ValueError):
        decode_png(b"definitely not a png")
