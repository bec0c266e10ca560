"""Grayscale image files: 8-bit PGM (P5) and PNG.

Images are float arrays in [0, 1].  Writing quantizes to 0..255 by rounding
to nearest, so a read/write round trip of an 8-bit file is bit-exact.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .preprocess import as_gray_image

# ITU-R 601 luma weights used when a color file is read.
LUMA = (0.299, 0.587, 0.114)


def to_uint8(img) -> np.ndarray:
    img = as_gray_image(img)
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _luminance(rgb: np.ndarray) -> np.ndarray:
    return rgb[..., 0] * LUMA[0] + rgb[..., 1] * LUMA[1] + rgb[..., 2] * LUMA[2]


def read_image(path) -> np.ndarray:
    """Load a PGM or PNG file as a float64 array in [0, 1].

    Raises ``OSError`` when the file is missing or cannot be decoded.
    """
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "P", "1"):
                data = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            elif mode in ("I;16", "I;16B", "I"):
                # 16-bit PGM/PNG: scale by the largest representable value.
                arr = np.asarray(im, dtype=np.float64)
                data = arr / 65535.0
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                data = _luminance(rgb)
    except OSError:
        raise
    except Exception as exc:  # Pillow raises a few non-OSError types on bad data
        raise OSError(f"cannot decode {path}: {exc}") from exc
    return np.clip(data, 0.0, 1.0)


def write_image(path, img) -> None:
    """Write ``img`` as 8-bit grayscale; the format follows the extension."""
    ext = os.path.splitext(str(path))[1].lower()
    data = to_uint8(img)
    if ext in (".pgm", ".pnm"):
        write_pgm(path, data)
    elif ext == ".png":
        Image.fromarray(data, mode="L").save(path, format="PNG")
    else:
        raise OSError(f"unsupported image extension {ext!r}; use .pgm or .png")


def write_pgm(path, data: np.ndarray) -> None:
    """Binary PGM with maxval 255.  ``data`` must already be ``uint8``."""
    data = np.ascontiguousarray(data, dtype=np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_accumulator(path, votes) -> None:
    """Save a vote grid as PGM, scaled so the largest cell maps to 255."""
    votes = np.asarray(getattr(votes, "votes", votes), dtype=np.float64)
    peak = votes.max() if votes.size else 0.0
    scaled = votes / peak if peak > 0 else np.zeros_like(votes)
    write_pgm(path, to_uint8(scaled))
