"""8-bit raster helpers and PNG round-tripping."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image


def check_raster(image) -> np.ndarray:
    img = np.asarray(image)
    if img.dtype != np.uint8:
        raise ValueError(f"raster must be uint8, got {img.dtype}")
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img
    raise ValueError(f"raster must be HxW or HxWx3, got shape {img.shape}")


def encode_png(image: np.ndarray) -> bytes:
    img = check_raster(image)
    buf = io.BytesIO()
    Image.fromarray(img, mode="L" if img.ndim == 2 else "RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK") else "L")
        return np.asarray(im)


def save_png(path: str | Path, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_png(image))


def load_png(path: str | Path) -> np.ndarray:
    return decode_png(Path(path).read_bytes())
