"""Binary feature-file formats.

FVEC: global descriptor for one image.
    magic b"FVEC" | u32 LE version=1 | u32 LE D | D * float32 LE

FMAP: dense per-pixel descriptor map, row-major, channel-last.
    magic b"FMAP" | u32 LE version=1 | u32 LE H | u32 LE W | u32 LE D |
    H*W*D * float32 LE
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

FVEC_MAGIC = b"FVEC"
FMAP_MAGIC = b"FMAP"
FORMAT_VERSION = 1


def write_fvec(path, values) -> None:
    values = np.asarray(values, dtype=np.float32).ravel()
    if values.size < 1:
        raise FormatError("FVEC requires at least one component")
    with open(path, "wb") as f:
        f.write(FVEC_MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, values.size))
        f.write(values.astype("<f4").tobytes())


def read_fvec(path) -> np.ndarray:
    """Read an FVEC file and return a float32 array of shape (D,)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != FVEC_MAGIC:
        raise FormatError(f"{path}: missing FVEC magic")
    version, dim = struct.unpack_from("<II", raw, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported FVEC version {version}")
    if dim < 1:
        raise FormatError(f"{path}: dimension must be >= 1")
    expected = 12 + 4 * dim
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4", count=dim, offset=12).copy()


def write_fmap(path, data) -> None:
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 3:
        raise FormatError("FMAP data must be H x W x D")
    h, w, d = data.shape
    if min(h, w, d) < 1:
        raise FormatError("FMAP dimensions must all be >= 1")
    with open(path, "wb") as f:
        f.write(FMAP_MAGIC)
        f.write(struct.pack("<IIII", FORMAT_VERSION, h, w, d))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def read_fmap(path) -> np.ndarray:
    """Read an FMAP file and return a float32 array of shape (H, W, D)."""
    raw = Path(path).read_bytes()
    if len(raw) < 20 or raw[:4] != FMAP_MAGIC:
        raise FormatError(f"{path}: missing FMAP magic")
    version, h, w, d = struct.unpack_from("<IIII", raw, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported FMAP version {version}")
    if min(h, w, d) < 1:
        raise FormatError(f"{path}: dimensions must all be >= 1")
    expected = 20 + 4 * h * w * d
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4", count=h * w * d, offset=20).reshape(h, w, d).copy()
