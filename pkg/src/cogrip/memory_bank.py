"""Exemplar memory: CoG-annotated images with global feature vectors.

Retrieval ranks stored exemplars against a query descriptor by cosine
similarity. Vectors are unit-normalized once at load time, so similarity
reduces to a dot product at query time.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DuplicateId, EmptyBank, FormatError, OutOfBounds, ParseError
from .io_formats import read_fvec, write_fvec

NORM_TOL = 1e-6
DEFAULT_TOPK = 3


class CogSource(enum.Enum):
    SUSPENSION = "Suspension"
    CENTROID = "Centroid"


@dataclass(frozen=True)
class FeatureVector:
    """Unit-norm global image descriptor."""

    values: np.ndarray

    @classmethod
    def from_raw(cls, values) -> "FeatureVector":
        """Normalize a raw descriptor to unit Euclidean norm. Rejects zeros."""
        v = np.asarray(values, dtype=np.float64).ravel()
        if v.size < 1:
            raise DimensionMismatch("feature vector must have dimension >= 1")
        if not np.all(np.isfinite(v)):
            raise FormatError("feature vector contains non-finite components")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise FormatError("zero feature vector rejected at load")
        return cls(values=v / norm)

    @property
    def dimension(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class MemoryEntry:
    id: str
    category: str
    image_path: str
    featmap_path: str
    fvec: FeatureVector
    cog: tuple[float, float]  # (u, v) pixels in the exemplar image
    source: CogSource


@dataclass(frozen=True)
class MemoryBank:
    """Immutable ordered collection of exemplars sharing one feature dimension."""

    entries: tuple[MemoryEntry, ...] = ()

    @property
    def dimension(self) -> int | None:
        return self.entries[0].fvec.dimension if self.entries else None

    def __len__(self) -> int:
        return len(self.entries)


def add_entry(bank: MemoryBank, entry: MemoryEntry) -> MemoryBank:
    """Return a new bank with `entry` appended."""
    if bank.entries:
        if entry.fvec.dimension != bank.dimension:
            raise DimensionMismatch(
                f"entry dimension {entry.fvec.dimension} != bank dimension {bank.dimension}"
            )
        if any(e.id == entry.id for e in bank.entries):
            raise DuplicateId(f"id {entry.id!r} already present")
    return MemoryBank(entries=bank.entries + (entry,))


def retrieve_topk(bank: MemoryBank, query: FeatureVector, k: int = DEFAULT_TOPK):
    """Top-k exemplars by descending cosine similarity to `query`.

    Ties are broken by ascending insertion index, so the ranking is
    deterministic. Returns a list of (entry, similarity) pairs of length
    min(k, len(bank)).
    """
    if not bank.entries:
        raise EmptyBank("cannot retrieve from an empty bank")
    if k < 1:
        raise ValueError("k must be >= 1")
    if query.dimension != bank.dimension:
        raise DimensionMismatch(
            f"query dimension {query.dimension} != bank dimension {bank.dimension}"
        )
    matrix = np.stack([e.fvec.values for e in bank.entries])
    sims = matrix @ query.values
    order = np.argsort(-sims, kind="stable")[: min(k, len(bank.entries))]
    return [(bank.entries[i], float(sims[i])) for i in order]


def _entry_from_record(rec: dict, base_dir: Path, check_bounds: bool) -> MemoryEntry:
    fvec_path = base_dir / rec["fvec_path"]
    fvec = FeatureVector.from_raw(read_fvec(fvec_path))
    cog = (float(rec["cog"]["u"]), float(rec["cog"]["v"]))
    entry = MemoryEntry(
        id=str(rec["id"]),
        category=str(rec["category"]),
        image_path=str(rec["image_path"]),
        featmap_path=str(rec["featmap_path"]),
        fvec=fvec,
        cog=cog,
        source=CogSource(rec["source"]),
    )
    if check_bounds:
        image_file = base_dir / entry.image_path
        if image_file.exists():
            from PIL import Image

            with Image.open(image_file) as im:
                w, h = im.size
            if not (0 <= cog[0] <= w - 1 and 0 <= cog[1] <= h - 1):
                raise OutOfBounds(f"entry {entry.id!r}: cog {cog} outside {w}x{h} image")
    return entry


def load_manifest(path, check_bounds: bool = True) -> MemoryBank:
    """Build a bank from a JSON manifest; paths are relative to the manifest."""
    path = Path(path)
    try:
        records = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(records, list):
        raise ParseError(f"{path}: manifest must be a JSON array")
    bank = MemoryBank()
    for rec in records:
        bank = add_entry(bank, _entry_from_record(rec, path.parent, check_bounds))
    return bank


def save_manifest(bank: MemoryBank, path) -> None:
    path = Path(path)
    records = []
    for e in bank.entries:
        records.append(
            {
                "id": e.id,
                "category": e.category,
                "image_path": e.image_path,
                "featmap_path": e.featmap_path,
                "fvec_path": f"fvecs/{e.id}.fvec",
                "cog": {"u": e.cog[0], "v": e.cog[1]},
                "source": e.source.value,
            }
        )
    (path.parent / "fvecs").mkdir(parents=True, exist_ok=True)
    for e in bank.entries:
        write_fvec(path.parent / "fvecs" / f"{e.id}.fvec", e.fvec.values)
    path.write_text(json.dumps(records, indent=2, sort_keys=True))
