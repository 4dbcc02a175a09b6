"""Dense semantic correspondence between feature maps.

Given a source map, a target map and a source pixel (typically an exemplar's
annotated CoG), find the target pixel whose descriptor is most cosine-similar
to the source descriptor. The target scan is an exhaustive argmax over integer
pixels; the source point is sampled with bilinear interpolation so sub-pixel
annotations are honored.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DepthMismatch, EmptyMask, FormatError, NoCandidates, OutOfBounds
from .io_formats import read_fmap


@dataclass(frozen=True)
class FeatureMap:
    """H x W x D dense descriptor map, row-major, channel-last."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or min(self.data.shape) < 1:
            raise FormatError("feature map data must be H x W x D with all dims >= 1")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def depth(self) -> int:
        return self.data.shape[2]

    @classmethod
    def load(cls, path) -> "FeatureMap":
        return cls(data=read_fmap(path))


@dataclass(frozen=True)
class CandidatePoint:
    """A proposed target-image CoG location with its match confidence."""

    point: tuple[int, int]  # (u, v)
    confidence: float
    provenance: str  # id of the source MemoryEntry


def sample_feature(fmap: FeatureMap, point) -> np.ndarray:
    """Bilinearly interpolated descriptor at a continuous pixel (u, v)."""
    u, v = float(point[0]), float(point[1])
    if not (0.0 <= u <= fmap.width - 1 and 0.0 <= v <= fmap.height - 1):
        raise OutOfBounds(f"point ({u}, {v}) outside {fmap.width}x{fmap.height} map")
    u0, v0 = int(np.floor(u)), int(np.floor(v))
    u1, v1 = min(u0 + 1, fmap.width - 1), min(v0 + 1, fmap.height - 1)
    fu, fv = u - u0, v - v0
    d = fmap.data.astype(np.float64)
    return (
        d[v0, u0] * (1 - fu) * (1 - fv)
        + d[v0, u1] * fu * (1 - fv)
        + d[v1, u0] * (1 - fu) * fv
        + d[v1, u1] * fu * fv
    )


def map_point(src_map: FeatureMap, tgt_map: FeatureMap, p_src, tgt_mask=None, provenance: str = "") -> CandidatePoint:
    """Best-matching target pixel for the source point's descriptor.

    Cosine similarity is evaluated at every target pixel (restricted to
    `tgt_mask` when given); zero-norm target pixels are never selected. Ties
    are broken by row-major scan order.
    """
    if src_map.depth != tgt_map.depth:
        raise DepthMismatch(f"source depth {src_map.depth} != target depth {tgt_map.depth}")
    src_vec = sample_feature(src_map, p_src)
    src_norm = np.linalg.norm(src_vec)
    if src_norm == 0.0:
        raise FormatError("source descriptor has zero norm")
    src_unit = src_vec / src_norm

    tgt = tgt_map.data.astype(np.float64)
    norms = np.linalg.norm(tgt, axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (tgt @ src_unit) / norms
    cos[norms == 0.0] = -np.inf

    if tgt_mask is not None:
        mask = np.asarray(tgt_mask, dtype=bool)
        if mask.shape != (tgt_map.height, tgt_map.width):
            raise DepthMismatch(
                f"mask shape {mask.shape} != target map shape "
                f"({tgt_map.height}, {tgt_map.width})"
            )
        if not mask.any():
            raise EmptyMask("target mask has no true pixels")
        cos[~mask] = -np.inf

    flat = int(np.argmax(cos))
    v, u = divmod(flat, tgt_map.width)
    best = float(cos[v, u])
    if not np.isfinite(best):
        raise EmptyMask("no target pixel with a finite similarity")
    return CandidatePoint(point=(u, v), confidence=best, provenance=provenance)


def generate_candidates(tgt_map: FeatureMap, tgt_mask, retrieved) -> list[CandidatePoint]:
    """One candidate per retrieved exemplar, in retrieval order.

    `retrieved` is a list of (MemoryEntry, source FeatureMap or path). A single
    failing exemplar is dropped with a warning; if every exemplar fails,
    NoCandidates is raised.
    """
    if not retrieved:
        raise NoCandidates("retrieval produced no exemplars")
    candidates = []
    for entry, src in retrieved:
        try:
            src_map = src if isinstance(src, FeatureMap) else FeatureMap.load(src)
            candidates.append(map_point(src_map, tgt_map, entry.cog, tgt_mask, provenance=entry.id))
        except Exception as exc:  # noqa: BLE001 - per-entry fault isolation
            warnings.warn(f"candidate from entry {entry.id!r} dropped: {exc}", stacklevel=2)
    if not candidates:
        raise NoCandidates("every retrieved exemplar failed to produce a candidate")
    return candidates
