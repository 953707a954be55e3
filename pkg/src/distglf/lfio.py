"""On-disk formats.

Light fields travel as a single grayscale PNG or PGM holding the tiled
view array (A*H rows x A*W columns, views tiled row-major by (u, v))
plus a text sidecar `<image>.lfmeta` with `ang_res`, `height`, `width`
(spatial size per view). Pixels are 8- or 16-bit and normalized to
[0, 1] on load. Disparity maps use little-endian PFM (scale -1.0).
"""

from __future__ import annotations

import os
import re

import numpy as np
from PIL import Image

from .lightfield import LayoutError, LightField, lf_to_view_tiles, view_tiles_to_lf


class DataError(ValueError):
    """Malformed or inconsistent on-disk data."""


SIDECAR_SUFFIX = ".lfmeta"


# ---- grayscale images (PNG via Pillow, PGM natively) ----


def write_gray(path, img, bit_depth=16):
    """Normalized [0, 1] float image -> 8- or 16-bit grayscale PNG/PGM."""
    if bit_depth not in (8, 16):
        raise DataError(f"bit depth must be 8 or 16, got {bit_depth}")
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    maxval = (1 << bit_depth) - 1
    q = np.round(arr * maxval).astype(np.uint16 if bit_depth == 16 else np.uint8)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        with open(path, "wb") as f:
            f.write(f"P5\n{q.shape[1]} {q.shape[0]}\n{maxval}\n".encode("ascii"))
            f.write(q.astype(">u2").tobytes() if bit_depth == 16 else q.tobytes())
    elif ext == ".png":
        mode = "I;16" if bit_depth == 16 else "L"
        Image.fromarray(q, mode=mode).save(path)
    else:
        raise DataError(f"unsupported image extension {ext!r} (use .png or .pgm)")


def read_gray(path):
    """Grayscale PNG/PGM -> float32 image normalized to [0, 1]."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        return _read_pgm(path)
    if ext != ".png":
        raise DataError(f"unsupported image extension {ext!r} (use .png or .pgm)")
    with Image.open(path) as im:
        if im.mode == "I;16":
            arr, maxval = np.asarray(im, dtype=np.uint16), 65535
        elif im.mode == "L":
            arr, maxval = np.asarray(im, dtype=np.uint8), 255
        elif im.mode == "I":
            arr, maxval = np.asarray(im, dtype=np.int32), 65535
        else:
            raise DataError(f"{path}: expected grayscale, got mode {im.mode!r}")
    return (arr.astype(np.float32) / maxval).astype(np.float32)


def _read_pgm(path):
    with open(path, "rb") as f:
        blob = f.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", blob[pos:])
        if m is None:
            raise DataError(f"{path}: truncated PGM header")
        tok = m.group(1)
        pos += m.end()
        if not tok.startswith(b"#"):
            tokens.append(tok)
    if tokens[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    pos += 1  # exactly one whitespace byte separates the header from the payload
    if maxval < 256:
        arr = np.frombuffer(blob, dtype=np.uint8, count=width * height, offset=pos)
    else:
        arr = np.frombuffer(blob, dtype=">u2", count=width * height, offset=pos)
    if arr.size != width * height:
        raise DataError(f"{path}: PGM payload shorter than {width}x{height}")
    return (arr.reshape(height, width).astype(np.float32) / maxval).astype(np.float32)


# ---- light fields (tiled view array + sidecar) ----


def sidecar_path(image_path):
    return image_path + SIDECAR_SUFFIX


def save_lightfield(path, lf: LightField, bit_depth=16):
    if not lf.is_square:
        raise LayoutError("on-disk light fields must have a square view grid")
    h, w = lf.spa_res
    write_gray(path, lf_to_view_tiles(lf), bit_depth)
    with open(sidecar_path(path), "w", encoding="ascii") as f:
        f.write(f"ang_res={lf.ang_res}\nheight={h}\nwidth={w}\n")


def load_sidecar(path):
    meta_path = sidecar_path(path)
    if not os.path.exists(meta_path):
        raise DataError(f"missing sidecar file {meta_path}")
    fields = {}
    with open(meta_path, encoding="ascii") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    try:
        return {k: int(fields[k]) for k in ("ang_res", "height", "width")}
    except KeyError as e:
        raise DataError(f"{meta_path}: missing field {e}") from None


def load_lightfield(path):
    meta = load_sidecar(path)
    img = read_gray(path)
    a, h, w = meta["ang_res"], meta["height"], meta["width"]
    if img.shape != (a * h, a * w):
        raise DataError(
            f"{path}: image is {img.shape}, sidecar implies {(a * h, a * w)}"
        )
    return view_tiles_to_lf(img, a)


# ---- PFM disparity maps ----


def write_pfm(path, data):
    """Single-channel PFM, little-endian (scale header -1.0), rows bottom-up."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise DataError(f"PFM writer expects a 2D map, got shape {arr.shape}")
    with open(path, "wb") as f:
        f.write(f"Pf\n{arr.shape[1]} {arr.shape[0]}\n-1.0\n".encode("ascii"))
        f.write(np.flipud(arr).astype("<f4").tobytes())


def read_pfm(path):
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"Pf":
            raise DataError(f"{path}: not a grayscale PFM (magic {magic!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise DataError(f"{path}: malformed PFM dimensions")
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        payload = f.read(width * height * 4)
    arr = np.frombuffer(payload, dtype=dtype)
    if arr.size != width * height:
        raise DataError(f"{path}: PFM payload shorter than {width}x{height}")
    return np.flipud(arr.reshape(height, width)).astype(np.float32)


# ---- plain key/value config files ----


def save_config(path, values: dict):
    with open(path, "w", encoding="ascii") as f:
        for key, value in values.items():
            if isinstance(value, (tuple, list)):
                value = ",".join(str(v) for v in value)
            f.write(f"{key}={value}\n")


def load_config(path):
    """key=value lines; ints, bools, floats and comma lists are parsed."""
    out = {}
    with open(path, encoding="ascii") as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DataError(f"{path}: malformed config line {raw!r}")
            out[key.strip()] = _parse_value(value.strip())
    return out


def _parse_value(text):
    if "," in text:
        return tuple(_parse_value(t.strip()) for t in text.split(","))
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text
