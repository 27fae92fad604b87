"""Binary NetPBM (P5) grayscale image I/O.

Frames are stored with maxval 255 (one byte per pixel) or up to 65535
(two bytes, big-endian); intensities normalize to [0, 1] by dividing by
maxval.
"""

import numpy as np

from .errors import FormatError
from .flow import Frame

_WHITESPACE = b" \t\r\n\x0b\x0c"


def write_pgm(frame: Frame, maxval: int = 255) -> bytes:
    """Serialize a frame as binary PGM with the given maxval."""
    if not 1 <= maxval <= 65535:
        raise FormatError("maxval must be in [1, 65535]")
    header = f"P5\n{frame.width} {frame.height}\n{maxval}\n".encode("ascii")
    quant = np.clip(np.rint(frame.pixels * maxval), 0, maxval)
    if maxval < 256:
        body = quant.astype(np.uint8).tobytes()
    else:
        body = quant.astype(">u2").tobytes()
    return header + body


def read_pgm(data: bytes) -> Frame:
    """Parse binary PGM bytes into a Frame; inverse of write_pgm."""
    return read_pgm_with_maxval(data)[0]


def read_pgm_with_maxval(data: bytes) -> tuple[Frame, int]:
    """Parse binary PGM bytes, also returning the stored maxval.

    The maxval lets callers re-emit a frame at its original bit depth.
    """
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while True:
            while pos < len(data) and data[pos] in _WHITESPACE:
                pos += 1
            if pos < len(data) and data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
                continue
            break
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE:
            pos += 1
        if start == pos:
            raise FormatError("truncated image header")
        return data[start:pos]

    if next_token() != b"P5":
        raise FormatError("not a binary PGM (P5) image")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise FormatError("malformed image header") from exc
    if width < 1 or height < 1:
        raise FormatError("image dimensions must be positive")
    if not 1 <= maxval <= 65535:
        raise FormatError("image maxval out of range")
    if pos >= len(data):
        raise FormatError("truncated image data")
    raster = data[pos + 1 :]
    bytes_per_px = 1 if maxval < 256 else 2
    expected = width * height * bytes_per_px
    if len(raster) != expected:
        raise FormatError(
            f"image payload is {len(raster)} bytes, expected {expected}"
        )
    dtype = np.uint8 if bytes_per_px == 1 else np.dtype(">u2")
    values = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return Frame(values.astype(np.float64) / maxval), maxval
