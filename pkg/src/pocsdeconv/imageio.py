"""Grayscale image files: PNG (via Pillow) and binary PGM (hand-rolled).

Inside the package pixels live in [0, 1].  Files store them quantized to
8 or 16 bits; loading divides by the file's maximum level, writing clamps
to [0, 1] first and rounds half up.  Color PNG input is collapsed to one
channel with the usual luma weights 0.299 R + 0.587 G + 0.114 B applied in
float, before any requantization.  PGM support is deliberately
dependency-free so golden files stay hand-checkable.
"""

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InvalidArgumentError, UnsupportedImageFormatError
from .spectral import validate_image

__all__ = [
    "RasterFormat",
    "RasterFile",
    "load_image",
    "write_image",
]

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_LUMA = (0.299, 0.587, 0.114)


class RasterFormat(enum.Enum):
    PNG = "png"
    PGM = "pgm"


@dataclass(frozen=True)
class RasterFile:
    """What a raster file on disk claims to be, without decoding the pixels."""

    path: str
    format: RasterFormat
    depth: int

    def __post_init__(self):
        if self.depth not in (8, 16):
            raise InvalidArgumentError(f"depth must be 8 or 16, got {self.depth}")


def probe(path):
    """Identify format and bit depth from the file header alone."""
    with open(path, "rb") as fh:
        head = fh.read(26)
        if head.startswith(_PNG_MAGIC):
            if len(head) < 25:
                raise UnsupportedImageFormatError(f"truncated PNG header: {path}")
            # IHDR layout: 8-byte signature, length, type, width, height, depth
            bit_depth = head[24]
            return RasterFile(str(path), RasterFormat.PNG, 16 if bit_depth == 16 else 8)
        if head.startswith(b"P5"):
            fh.seek(2)
            _read_pgm_token(fh)  # width
            _read_pgm_token(fh)  # height
            maxval = int(_read_pgm_token(fh))
            return RasterFile(str(path), RasterFormat.PGM, 8 if maxval < 256 else 16)
    raise UnsupportedImageFormatError(f"not a PNG or binary PGM file: {path}")


def _read_pgm_token(fh):
    # netpbm headers: tokens separated by whitespace, '#' comments run to EOL
    tok = b""
    while True:
        ch = fh.read(1)
        if ch == b"":
            raise UnsupportedImageFormatError("truncated PGM header")
        if ch == b"#":
            while ch not in (b"\n", b"", b"\r"):
                ch = fh.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        if not ch.isdigit():
            raise UnsupportedImageFormatError(f"bad PGM header token {ch!r}")
        tok += ch


def _load_pgm(path):
    with open(path, "rb") as fh:
        if fh.read(2) != b"P5":
            raise UnsupportedImageFormatError(f"not a binary PGM file: {path}")
        width = int(_read_pgm_token(fh))
        height = int(_read_pgm_token(fh))
        maxval = int(_read_pgm_token(fh))
        if width == 0 or height == 0:
            raise InvalidArgumentError(f"zero-dimension PGM: {width}x{height}")
        if not 1 <= maxval <= 65535:
            raise UnsupportedImageFormatError(f"PGM maxval out of range: {maxval}")
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        raw = fh.read(width * height * dtype.itemsize)
        if len(raw) != width * height * dtype.itemsize:
            raise UnsupportedImageFormatError(f"truncated PGM raster: {path}")
    pixels = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return pixels.astype(np.float64) / maxval


def _load_png(path):
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.asarray(im)
    except UnidentifiedImageError as exc:
        raise UnsupportedImageFormatError(f"cannot decode {path}: {exc}") from exc
    if arr.ndim == 2 and (arr.shape[0] == 0 or arr.shape[1] == 0):
        raise InvalidArgumentError(f"zero-dimension image: {arr.shape}")
    if mode == "L":
        return arr.astype(np.float64) / 255.0
    if mode in ("I", "I;16"):
        return arr.astype(np.float64) / 65535.0
    if mode in ("RGB", "RGBA"):
        rgb = arr[..., :3].astype(np.float64) / 255.0
        return rgb @ np.asarray(_LUMA)
    if mode == "LA":
        return arr[..., 0].astype(np.float64) / 255.0
    raise UnsupportedImageFormatError(f"unsupported PNG mode {mode!r}: {path}")


def load_image(path):
    """Load a PNG or binary PGM as a float image in [0, 1].

    Color input is reduced to luma.  Raises FileNotFoundError for a missing
    path, UnsupportedImageFormatError for undecodable content, and
    InvalidArgumentError for a decodable file with a zero dimension.
    """
    info = probe(path)
    if info.format is RasterFormat.PGM:
        return _load_pgm(path)
    return _load_png(path)


def _quantize(img, depth):
    levels = (1 << depth) - 1
    clamped = np.clip(img, 0.0, 1.0)
    # round half up; np.round would round half to even
    return np.floor(clamped * levels + 0.5).astype(np.uint16 if depth == 16 else np.uint8)


def write_image(img, path, depth=8):
    """Write a [0, 1] image as 8- or 16-bit grayscale PNG or PGM.

    The format follows the file suffix (.png or .pgm).  Values are clamped
    to [0, 1] before quantization, so out-of-range pixels saturate instead
    of wrapping.
    """
    arr = validate_image(img)
    if depth not in (8, 16):
        raise InvalidArgumentError(f"depth must be 8 or 16, got {depth}")
    suffix = Path(path).suffix.lower()
    q = _quantize(arr, depth)
    if suffix == ".png":
        # uint16 infers mode I;16, uint8 infers L
        Image.fromarray(q).save(path, format="PNG")
    elif suffix == ".pgm":
        maxval = (1 << depth) - 1
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n%d\n" % (arr.shape[1], arr.shape[0], maxval))
            if depth == 16:
                fh.write(q.astype(">u2").tobytes())
            else:
                fh.write(q.tobytes())
    else:
        raise UnsupportedImageFormatError(f"unsupported output suffix {suffix!r} (use .png or .pgm)")
