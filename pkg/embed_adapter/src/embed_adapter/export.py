"""Batch export of image features to FVEC/FMAP files.

Each job writes, per input image, `<stem>.fvec` (global descriptor) and
`<stem>.fmap` (dense descriptor map), plus a single `metadata.json` sidecar
recording the backend identity, its settings, and the per-file shapes.
Given fixed settings the output bytes are identical across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends import make_backend
from .errors import UnreadableImage
from .formats import write_fmap, write_fvec

METADATA_NAME = "metadata.json"


@dataclass(frozen=True)
class ExportJob:
    images: tuple
    out_dir: Path
    backend: str = "handcrafted"
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.images:
            raise ValueError("export job needs at least one image")


def _load_rgb(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, UnidentifiedImageError) as exc:
        raise UnreadableImage(f"{path}: {exc}") from exc


def export_features(job: ExportJob) -> dict:
    """Run the job; returns the metadata that was written to the sidecar."""
    backend = make_backend(job.backend, job.settings)
    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    files = {}
    for image_path in job.images:
        image_path = Path(image_path)
        rgb = _load_rgb(image_path)
        dense, global_vec = backend.extract(rgb)
        stem = image_path.stem
        write_fvec(out / f"{stem}.fvec", global_vec)
        write_fmap(out / f"{stem}.fmap", dense)
        files[stem] = {
            "source": str(image_path),
            "fvec": f"{stem}.fvec",
            "fmap": f"{stem}.fmap",
            "height": int(dense.shape[0]),
            "width": int(dense.shape[1]),
            "dimension": int(dense.shape[2]),
        }

    metadata = {
        "backend": backend.name,
        "settings": backend.settings,
        "files": files,
    }
    (out / METADATA_NAME).write_text(json.dumps(metadata, indent=2, sort_keys=True))
    return metadata
