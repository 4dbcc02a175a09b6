"""Synthetic tool family, fixture rendering, and benchmark policies.

Each of the ten tool categories is a two-part collinear tool (light handle,
heavy head) with randomized dimensions and masses. A fixture rasterizes the
tool into a mask and a dense descriptor map whose in-mask features encode
normalized object-frame coordinates plus a per-category signature, so the
real retrieval/correspondence stack runs on it end to end. The planar raster
doubles as a pinhole view at unit depth, which keeps pixel geometry and 3D
pose projection consistent.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .annotation import CATEGORIES as TOOL_CATEGORIES
from .cog_locator import select_cog
from .correspondence import FeatureMap, generate_candidates
from .grasp_filter import CameraIntrinsics
from .memory_bank import CogSource, FeatureVector, MemoryBank, MemoryEntry, add_entry, retrieve_topk
from .stability_sim import RectPart, RigidObjectModel, true_cog

FEATURE_DEPTH = 8
DEFAULT_RESOLUTION = 96
SCENE_DEPTH_M = 1.0

# (handle_len, handle_width, head_len, head_width, handle_mass, head_mass) ranges
_FAMILY = {
    "hammer": ((0.22, 0.30), (0.022, 0.030), (0.07, 0.10), (0.055, 0.075), (0.12, 0.22), (0.80, 1.60)),
    "wrench": ((0.18, 0.28), (0.018, 0.026), (0.05, 0.08), (0.045, 0.065), (0.10, 0.20), (0.55, 1.20)),
    "pincers": ((0.16, 0.22), (0.020, 0.028), (0.05, 0.07), (0.040, 0.060), (0.10, 0.18), (0.45, 1.00)),
    "t-type allen wrench": ((0.14, 0.20), (0.014, 0.020), (0.04, 0.06), (0.045, 0.065), (0.06, 0.12), (0.40, 0.90)),
    "allen key": ((0.12, 0.18), (0.010, 0.016), (0.03, 0.05), (0.030, 0.045), (0.05, 0.10), (0.35, 0.80)),
    "adjustable wrench": ((0.18, 0.26), (0.020, 0.028), (0.06, 0.09), (0.050, 0.070), (0.12, 0.22), (0.70, 1.50)),
    "ratchet wrench": ((0.18, 0.26), (0.018, 0.026), (0.05, 0.08), (0.045, 0.065), (0.10, 0.20), (0.60, 1.30)),
    "hand file": ((0.16, 0.24), (0.020, 0.028), (0.06, 0.10), (0.035, 0.050), (0.08, 0.16), (0.50, 1.10)),
    "screwdriver": ((0.14, 0.22), (0.016, 0.024), (0.05, 0.08), (0.028, 0.040), (0.07, 0.14), (0.40, 0.90)),
    "chisel": ((0.14, 0.20), (0.016, 0.024), (0.05, 0.08), (0.032, 0.048), (0.08, 0.15), (0.45, 1.00)),
}


def _uniform(rng, lo_hi) -> float:
    return float(rng.uniform(lo_hi[0], lo_hi[1]))


def category_signature(category: str) -> np.ndarray:
    """Stable unit 4-vector per category, scaled for retrieval contrast."""
    rng = np.random.default_rng(zlib.crc32(category.encode()))
    v = rng.standard_normal(4)
    return 1.5 * v / np.linalg.norm(v)


def sample_tool(category: str, rng) -> RigidObjectModel:
    """Two collinear rectangles along +x: handle from the origin, head at the tip."""
    if category not in _FAMILY:
        raise KeyError(f"unknown category {category!r}")
    hl, hw, el, ew, hm, em = _FAMILY[category]
    handle_len = _uniform(rng, hl)
    head_len = _uniform(rng, el)
    handle = RectPart(
        center=(handle_len / 2.0, 0.0),
        half_extents=(handle_len / 2.0, _uniform(rng, hw) / 2.0),
        angle=0.0,
        mass=_uniform(rng, hm),
    )
    head = RectPart(
        center=(handle_len + head_len / 2.0, 0.0),
        half_extents=(head_len / 2.0, _uniform(rng, ew) / 2.0),
        angle=0.0,
        mass=_uniform(rng, em),
    )
    return RigidObjectModel(parts=(handle, head))


@dataclass
class SyntheticFixture:
    """A rendered tool instance: mask, features, camera, and ground truth."""

    category: str
    model: RigidObjectModel
    mask: np.ndarray  # (H, W) bool
    fmap: FeatureMap
    fvec: FeatureVector
    origin: tuple[float, float]  # world coords of pixel (0, 0)
    scale: float  # meters per pixel
    cam: CameraIntrinsics
    handle_index: int = 0
    head_index: int = 1

    @property
    def true_cog_world(self) -> tuple[float, float]:
        return true_cog(self.model)

    @property
    def true_cog_pixel(self) -> tuple[int, int]:
        u, v = self.world_to_pixel(self.true_cog_world)
        return (int(round(u)), int(round(v)))

    def world_to_pixel(self, p) -> tuple[float, float]:
        return ((p[0] - self.origin[0]) / self.scale, (p[1] - self.origin[1]) / self.scale)

    def pixel_to_world(self, uv) -> tuple[float, float]:
        return (self.origin[0] + uv[0] * self.scale, self.origin[1] + uv[1] * self.scale)

    def clamp_to_object(self, point) -> tuple[float, float]:
        """Snap a world point to the object (nearest in-mask pixel if off)."""
        if self.model.contains(point):
            return (float(point[0]), float(point[1]))
        vs, us = np.nonzero(self.mask)
        xs = self.origin[0] + us * self.scale
        ys = self.origin[1] + vs * self.scale
        i = int(np.argmin((xs - point[0]) ** 2 + (ys - point[1]) ** 2))
        return (float(xs[i]), float(ys[i]))


def make_fixture(category: str, rng, resolution: int = DEFAULT_RESOLUTION) -> SyntheticFixture:
    model = sample_tool(category, rng)
    return render_fixture(category, model, rng, resolution)


def render_fixture(category: str, model: RigidObjectModel, rng, resolution: int = DEFAULT_RESOLUTION) -> SyntheticFixture:
    xmin, ymin, xmax, ymax = model.bounding_box()
    span = max(xmax - xmin, ymax - ymin)
    scale = span / (0.82 * resolution)
    cx_w, cy_w = (xmin + xmax) / 2.0, (ymin + ymax) / 2.0
    origin = (cx_w - resolution / 2.0 * scale, cy_w - resolution / 2.0 * scale)

    us, vs = np.meshgrid(np.arange(resolution), np.arange(resolution))
    xs = origin[0] + us * scale
    ys = origin[1] + vs * scale
    mask = model.contains_many(xs, ys)

    # in-mask features: foreground flag, bbox-normalized coords, category
    # signature, constant bias; background pixels get unit-scale noise.
    nx = (xs - xmin) / max(xmax - xmin, 1e-9)
    ny = (ys - ymin) / max(ymax - ymin, 1e-9)
    sig = category_signature(category)
    data = rng.standard_normal((resolution, resolution, FEATURE_DEPTH))
    fg = np.zeros((resolution, resolution, FEATURE_DEPTH))
    fg[..., 0] = 2.0
    fg[..., 1] = nx
    fg[..., 2] = ny
    fg[..., 3:7] = sig
    fg[..., 7] = 1.0
    data = np.where(mask[..., None], fg + 0.02 * rng.standard_normal(data.shape), data)
    fmap = FeatureMap(data=data.astype(np.float32))

    fvec = FeatureVector.from_raw(data[mask].mean(axis=0))

    # planar raster as a pinhole view at unit depth
    cam = CameraIntrinsics(
        fx=1.0 / scale, fy=1.0 / scale, cx=-origin[0] / scale, cy=-origin[1] / scale
    )
    return SyntheticFixture(
        category=category,
        model=model,
        mask=mask,
        fmap=fmap,
        fvec=fvec,
        origin=origin,
        scale=scale,
        cam=cam,
    )


@dataclass
class BankContext:
    """A synthetic memory bank plus in-memory feature maps per entry id."""

    bank: MemoryBank
    fmaps: dict
    fixtures: dict


@dataclass
class PolicyContext:
    bank: BankContext
    rng: np.random.Generator


def build_synthetic_bank(seed: int = 0, per_category: int = 3, resolution: int = DEFAULT_RESOLUTION) -> BankContext:
    bank = MemoryBank()
    fmaps, fixtures = {}, {}
    for category in TOOL_CATEGORIES:
        for i in range(per_category):
            rng = np.random.default_rng([seed, 7000 + zlib.crc32(category.encode()) % 1000, i])
            fixture = make_fixture(category, rng, resolution)
            entry_id = f"{category.replace(' ', '-')}-{i}"
            cog_px = fixture.true_cog_pixel
            entry = MemoryEntry(
                id=entry_id,
                category=category,
                image_path=f"images/{entry_id}.png",
                featmap_path=f"fmaps/{entry_id}.fmap",
                fvec=fixture.fvec,
                cog=(float(cog_px[0]), float(cog_px[1])),
                source=CogSource.SUSPENSION,
            )
            bank = add_entry(bank, entry)
            fmaps[entry_id] = fixture.fmap
            fixtures[entry_id] = fixture
    return BankContext(bank=bank, fmaps=fmaps, fixtures=fixtures)


def estimate_cog_pixel(fixture: SyntheticFixture, bank_ctx: BankContext, k: int = 3):
    """Run the retrieval -> correspondence -> medoid stack on a fixture."""
    ranked = retrieve_topk(bank_ctx.bank, fixture.fvec, k=k)
    retrieved = [(entry, bank_ctx.fmaps[entry.id]) for entry, _ in ranked]
    candidates = generate_candidates(fixture.fmap, fixture.mask, retrieved)
    return select_cog(candidates)


def cog_policy(fixture: SyntheticFixture, ctx: PolicyContext) -> tuple[float, float]:
    est = estimate_cog_pixel(fixture, ctx.bank)
    return fixture.pixel_to_world(est.point)


def affordance_policy(fixture: SyntheticFixture, ctx: PolicyContext) -> tuple[float, float]:
    """Grasp where humans habitually hold the tool: the handle's middle."""
    return fixture.model.parts[fixture.handle_index].center


def keypoint_policy(fixture: SyntheticFixture, ctx: PolicyContext) -> tuple[float, float]:
    """Grasp at one of the object's long-axis endpoints (keypoint style)."""
    xmin, _, xmax, _ = fixture.model.bounding_box()
    inset = 0.01
    x = xmin + inset if ctx.rng.integers(2) == 0 else xmax - inset
    return (x, 0.0)


def default_policies() -> dict:
    return {
        "cog_policy": cog_policy,
        "affordance_policy": affordance_policy,
        "keypoint_policy": keypoint_policy,
    }


def write_bank(bank_ctx: BankContext, out_dir) -> "Path":
    """Persist a synthetic bank: manifest + FVEC/FMAP files + mask images."""
    from pathlib import Path

    from PIL import Image

    from .io_formats import write_fmap
    from .memory_bank import save_manifest

    out = Path(out_dir)
    (out / "fmaps").mkdir(parents=True, exist_ok=True)
    (out / "images").mkdir(parents=True, exist_ok=True)
    for entry in bank_ctx.bank.entries:
        write_fmap(out / entry.featmap_path, bank_ctx.fmaps[entry.id].data)
        fixture = bank_ctx.fixtures[entry.id]
        Image.fromarray((fixture.mask * 255).astype(np.uint8)).save(out / entry.image_path)
    manifest = out / "manifest.json"
    save_manifest(bank_ctx.bank, manifest)
    return manifest


def write_scene(
    fixture: SyntheticFixture,
    out_dir,
    label: str | None = None,
    rng=None,
    n_extra_poses: int = 6,
    distractor_label: str = "cup",
) -> "Path":
    """Write a scene fixture directory for the target fixture plus a distractor.

    Pose 0 sits exactly at the tool's true CoG at scene depth with top score;
    the extras are spread along the tool with lower scores, so the fixture has
    a unique correct plan. The tracked reference starts at pose 0's projection.
    """
    import json as _json
    from pathlib import Path

    from PIL import Image

    from .io_formats import write_fmap, write_fvec

    rng = rng if rng is not None else np.random.default_rng(0)
    label = label or fixture.category
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    (out / "features").mkdir(parents=True, exist_ok=True)

    h, w = fixture.mask.shape
    Image.fromarray((fixture.mask * 200).astype(np.uint8)).save(out / "rgb.png")
    Image.fromarray((fixture.mask * 255).astype(np.uint8)).save(out / "masks" / "obj1.png")

    # distractor: small blob with noise features, disjoint from the tool
    dmask = np.zeros((h, w), dtype=bool)
    dmask[2:10, 2:10] = True
    dmask &= ~fixture.mask
    Image.fromarray((dmask * 255).astype(np.uint8)).save(out / "masks" / "obj2.png")

    (out / "labels.json").write_text(
        _json.dumps([{"id": "obj1", "label": label}, {"id": "obj2", "label": distractor_label}])
    )

    write_fvec(out / "features" / "obj1.fvec", fixture.fvec.values)
    write_fmap(out / "features" / "obj1.fmap", fixture.fmap.data)
    write_fvec(out / "features" / "obj2.fvec", rng.standard_normal(FEATURE_DEPTH))
    write_fmap(
        out / "features" / "obj2.fmap",
        rng.standard_normal((h, w, FEATURE_DEPTH)).astype(np.float32),
    )

    (out / "intrinsics.json").write_text(
        _json.dumps(
            {"fx": fixture.cam.fx, "fy": fixture.cam.fy, "cx": fixture.cam.cx, "cy": fixture.cam.cy}
        )
    )

    cog_w = fixture.true_cog_world
    poses = [
        {
            "position": [cog_w[0], cog_w[1], SCENE_DEPTH_M],
            "rotation": [1.0, 0.0, 0.0, 0.0],
            "width": 0.04,
            "depth": 0.02,
            "score": 0.95,
        }
    ]
    xmin, _, xmax, _ = fixture.model.bounding_box()
    for i in range(n_extra_poses):
        x = xmin + 0.012 + (xmax - xmin - 0.024) * (i + 0.5) / n_extra_poses
        poses.append(
            {
                "position": [x, 0.0, SCENE_DEPTH_M],
                "rotation": [1.0, 0.0, 0.0, 0.0],
                "width": 0.04,
                "depth": 0.02,
                "score": round(0.3 + 0.4 * float(rng.random()), 4),
            }
        )
    (out / "poses.json").write_text(_json.dumps(poses, indent=2))

    u0 = fixture.cam.fx * cog_w[0] / SCENE_DEPTH_M + fixture.cam.cx
    v0 = fixture.cam.fy * cog_w[1] / SCENE_DEPTH_M + fixture.cam.cy
    (out / "track.json").write_text(
        _json.dumps({"reference": {"u": u0, "v": v0}, "updates": []})
    )
    return out
