"""Writers for the grasp engine's binary feature-file formats.

FVEC: global descriptor for one image.
    magic b"FVEC" | u32 LE version=1 | u32 LE D | D * float32 LE

FMAP: dense per-pixel descriptor map, row-major, channel-last.
    magic b"FMAP" | u32 LE version=1 | u32 LE H | u32 LE W | u32 LE D |
    H*W*D * float32 LE

Writes are atomic: content lands in a temp file that is renamed into place,
so a crashed export never leaves a truncated feature file behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

FVEC_MAGIC = b"FVEC"
FMAP_MAGIC = b"FMAP"
FORMAT_VERSION = 1


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_fvec(path, values) -> None:
    values = np.asarray(values, dtype="<f4").ravel()
    if values.size < 1:
        raise ValueError("FVEC requires at least one component")
    payload = FVEC_MAGIC + struct.pack("<II", FORMAT_VERSION, values.size) + values.tobytes()
    _atomic_write(path, payload)


def write_fmap(path, data) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 3 or min(data.shape) < 1:
        raise ValueError("FMAP data must be H x W x D with all dims >= 1")
    h, w, d = data.shape
    payload = FMAP_MAGIC + struct.pack("<IIII", FORMAT_VERSION, h, w, d) + data.tobytes()
    _atomic_write(path, payload)
