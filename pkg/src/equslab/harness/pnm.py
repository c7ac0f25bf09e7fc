"""Binary PNM images (P5 greyscale, P6 RGB), 8 or 16 bits per sample."""

import re

import numpy as np


class PNMError(ValueError):
    pass


_HEADER = re.compile(rb"\A(P[56])(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


def quantize(img, maxval):
    """Clamp to [0, 1] and round half-to-even onto ``0..maxval``."""
    return np.rint(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * maxval).astype(np.int64)


def encode(img, bits=16):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    H, W, C = img.shape
    if C not in (1, 3):
        raise PNMError(f"PNM stores 1 or 3 channels, got {C}")
    if bits not in (8, 16):
        raise PNMError("bits must be 8 or 16")
    maxval = 255 if bits == 8 else 65535
    q = quantize(img, maxval)
    payload = q.astype(">u2" if bits == 16 else "u1").tobytes()
    magic = b"P5" if C == 1 else b"P6"
    return magic + b"\n%d %d\n%d\n" % (W, H, maxval) + payload


def decode(data):
    """Parse PNM bytes into floats in [0, 1] with shape ``(H, W, C)``."""
    m = _HEADER.match(data)
    if m is None:
        raise PNMError("malformed PNM header")
    magic, W, H, maxval = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if W < 1 or H < 1 or not 0 < maxval < 65536:
        raise PNMError(f"invalid PNM dimensions or maxval: {W}x{H}, {maxval}")
    C = 1 if magic == b"P5" else 3
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    count = H * W * C
    payload = data[m.end():]
    if len(payload) < count * dtype.itemsize:
        raise PNMError(f"truncated payload: need {count * dtype.itemsize} bytes, got {len(payload)}")
    q = np.frombuffer(payload, dtype=dtype, count=count).reshape(H, W, C)
    if q.max(initial=0) > maxval:
        raise PNMError("sample exceeds maxval")
    return q.astype(np.float64) / maxval


def write_pnm(path, img, bits=16):
    with open(path, "wb") as fh:
        fh.write(encode(img, bits))


def read_pnm(path):
    with open(path, "rb") as fh:
        return decode(fh.read())
