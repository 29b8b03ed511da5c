"""Binary netpbm image I/O: P6 (color PPM) and P5 (grayscale PGM), maxval 255.

Loads map 8-bit samples linearly to [0, 1] by dividing by 255; saves clamp
to [0, 1] and round back. The writer emits a canonical header so a
save/load/save round trip is byte-identical.
"""

from __future__ import annotations

import os

import numpy as np


class NetpbmError(ValueError):
    """Malformed netpbm data; the message carries the byte offset."""


MAXVAL = 255
_MAGIC_CHANNELS = {b"P6": 3, b"P5": 1}


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def error(self, message: str) -> NetpbmError:
        return NetpbmError(f"{message} at byte {self.pos}")

    def skip_whitespace_and_comments(self):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos:self.pos + 1]
            if c.isspace():
                self.pos += 1
            elif c == b"#":
                while self.pos < len(d) and d[self.pos:self.pos + 1] != b"\n":
                    self.pos += 1
            else:
                return

    def read_token(self) -> bytes:
        self.skip_whitespace_and_comments()
        start = self.pos
        d = self.data
        while self.pos < len(d) and not d[self.pos:self.pos + 1].isspace():
            self.pos += 1
        if self.pos == start:
            raise self.error("unexpected end of header")
        return d[start:self.pos]

    def read_int(self, what: str) -> int:
        tok = self.read_token()
        try:
            return int(tok)
        except ValueError:
            self.pos -= len(tok)
            raise self.error(f"invalid {what} {tok!r}") from None


def decode(data: bytes) -> np.ndarray:
    """Decode P5/P6 bytes into an (H, W, C) float array in [0, 1]."""
    r = _Reader(data)
    magic = data[:2]
    if magic not in _MAGIC_CHANNELS:
        raise NetpbmError(f"unsupported magic {magic!r} at byte 0")
    r.pos = 2
    channels = _MAGIC_CHANNELS[magic]
    width = r.read_int("width")
    height = r.read_int("height")
    if width < 1 or height < 1:
        raise r.error(f"invalid dimensions {width}x{height}")
    maxval = r.read_int("maxval")
    if maxval != MAXVAL:
        raise r.error(f"unsupported maxval {maxval} (need {MAXVAL})")
    # Exactly one whitespace byte separates the header from the payload.
    if r.pos >= len(data) or not data[r.pos:r.pos + 1].isspace():
        raise r.error("missing whitespace before payload")
    r.pos += 1
    expected = width * height * channels
    payload = data[r.pos:r.pos + expected]
    if len(payload) != expected:
        raise NetpbmError(
            f"truncated payload: expected {expected} bytes, got {len(payload)} "
            f"at byte {r.pos}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return (pixels / MAXVAL).reshape(height, width, channels)


def encode(image: np.ndarray) -> bytes:
    """Encode an (H, W, 1|3) image in [0, 1] as canonical P5/P6 bytes."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] not in (1, 3):
        raise NetpbmError(
            f"encode: need (H, W, 1) or (H, W, 3), got shape {image.shape}"
        )
    if not np.all(np.isfinite(image)):
        raise NetpbmError("encode: non-finite pixel values")
    magic = b"P6" if image.shape[2] == 3 else b"P5"
    clamped = np.clip(image, 0.0, 1.0)
    samples = np.rint(clamped * MAXVAL).astype(np.uint8)
    header = b"%s\n%d %d\n%d\n" % (magic, image.shape[1], image.shape[0], MAXVAL)
    return header + samples.tobytes()


def load_image(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode(fh.read())


def save_image(image: np.ndarray, path: str | os.PathLike) -> None:
    data = encode(image)
    with open(path, "wb") as fh:
        fh.write(data)
