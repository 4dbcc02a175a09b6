"""Ground-truth CoG annotation geometry and dataset validation.

Two annotation methods:
  * suspension — the object is hung twice; the plumb lines through the
    suspension points intersect at the CoG (solved as a 2x2 linear system);
  * centroid — the CoG is taken as the arithmetic mean of the true pixels of
    a segmentation mask.

Pixel convention: a pixel's coordinate is its integer index, so the centroid
of a single pixel at (7, 2) is exactly (7, 2).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyMask, NearParallel, ParseError

DET_TOL = 1e-9

# The ten tool categories in the exemplar dataset.
CATEGORIES = (
    "hammer",
    "wrench",
    "pincers",
    "t-type allen wrench",
    "allen key",
    "adjustable wrench",
    "ratchet wrench",
    "hand file",
    "screwdriver",
    "chisel",
)


class AnnotationMethod(enum.Enum):
    SUSPENSION = "Suspension"
    CENTROID = "Centroid"


@dataclass(frozen=True)
class PlumbLine:
    """Gravity line through a suspension point, in the object frame."""

    anchor: tuple[float, float]
    direction: tuple[float, float]

    def __post_init__(self):
        n = float(np.hypot(*self.direction))
        if abs(n - 1.0) > 1e-9:
            object.__setattr__(self, "direction", (self.direction[0] / n, self.direction[1] / n))

    @classmethod
    def from_segment(cls, p1, p2) -> "PlumbLine":
        d = (p2[0] - p1[0], p2[1] - p1[1])
        n = float(np.hypot(*d))
        if n == 0.0:
            raise ValueError("segment endpoints coincide")
        return cls(anchor=(float(p1[0]), float(p1[1])), direction=(d[0] / n, d[1] / n))


@dataclass(frozen=True)
class CoGAnnotation:
    point: tuple[float, float]
    method: AnnotationMethod
    residual: float = 0.0


def _point_line_distance(p, line: PlumbLine) -> float:
    dx, dy = p[0] - line.anchor[0], p[1] - line.anchor[1]
    # perpendicular component relative to the unit direction
    return abs(dx * line.direction[1] - dy * line.direction[0])


def plumb_intersection(l1: PlumbLine, l2: PlumbLine) -> CoGAnnotation:
    """Intersect two plumb lines; the crossing point is the CoG."""
    d1, d2 = l1.direction, l2.direction
    det = d1[0] * (-d2[1]) - (-d2[0]) * d1[1]
    scale = max(1.0, max(abs(c) for c in (*l1.anchor, *l2.anchor)))
    if abs(det) < DET_TOL * scale:
        raise NearParallel(f"plumb lines nearly parallel (|det| = {abs(det):.3e})")
    b = (l2.anchor[0] - l1.anchor[0], l2.anchor[1] - l1.anchor[1])
    t1 = (b[0] * (-d2[1]) - (-d2[0]) * b[1]) / det
    point = (l1.anchor[0] + t1 * d1[0], l1.anchor[1] + t1 * d1[1])
    residual = max(_point_line_distance(point, l1), _point_line_distance(point, l2))
    return CoGAnnotation(point=point, method=AnnotationMethod.SUSPENSION, residual=residual)


def region_centroid(mask) -> CoGAnnotation:
    """Mean (u, v) of the true pixels of a binary mask."""
    mask = np.asarray(mask, dtype=bool)
    vs, us = np.nonzero(mask)
    if us.size == 0:
        raise EmptyMask("mask has no true pixels")
    return CoGAnnotation(
        point=(float(us.mean()), float(vs.mean())), method=AnnotationMethod.CENTROID
    )


@dataclass
class ValidationReport:
    total: int = 0
    category_counts: dict = field(default_factory=dict)
    unknown_categories: list = field(default_factory=list)
    missing_files: list = field(default_factory=list)
    out_of_bounds: list = field(default_factory=list)
    count_mismatches: dict = field(default_factory=dict)  # category -> (found, expected)

    @property
    def ok(self) -> bool:
        return not (
            self.unknown_categories
            or self.missing_files
            or self.out_of_bounds
            or self.count_mismatches
        )

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "category_counts": self.category_counts,
            "unknown_categories": self.unknown_categories,
            "missing_files": self.missing_files,
            "out_of_bounds": self.out_of_bounds,
            "count_mismatches": {k: list(v) for k, v in self.count_mismatches.items()},
            "ok": self.ok,
        }


def validate_dataset(manifest_path, expected_counts: dict | None = None) -> ValidationReport:
    """Check a dataset manifest: category vocabulary, file presence, bounds.

    `expected_counts` maps category (or "total") to the expected number of
    entries; mismatches are reported, not raised.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{manifest_path}: {exc}") from exc
    entries = manifest["entries"] if isinstance(manifest, dict) else manifest
    base = manifest_path.parent

    report = ValidationReport(total=len(entries))
    for i, rec in enumerate(entries):
        category = str(rec.get("category", "")).lower()
        report.category_counts[category] = report.category_counts.get(category, 0) + 1
        if category not in CATEGORIES:
            report.unknown_categories.append(category)
        paths = [rec.get("image_path")] + list(rec.get("suspended_image_paths", []))
        dims = None
        for p in paths:
            if p is None:
                continue
            f = base / p
            if not f.exists():
                report.missing_files.append(str(p))
            elif p == rec.get("image_path"):
                try:
                    from PIL import Image

                    with Image.open(f) as im:
                        dims = im.size
                except OSError:
                    report.missing_files.append(str(p))
        ann = rec.get("annotation", {})
        pt = ann.get("point")
        if pt is not None and dims is not None:
            u, v = float(pt["u"]), float(pt["v"])
            if not (0 <= u <= dims[0] - 1 and 0 <= v <= dims[1] - 1):
                report.out_of_bounds.append({"index": i, "point": [u, v]})

    if expected_counts:
        for category, expected in expected_counts.items():
            if category == "total":
                found = report.total
            else:
                found = report.category_counts.get(category.lower(), 0)
            if found != expected:
                report.count_mismatches[category] = (found, expected)
    return report
