"""End-to-end orchestration: scene ingestion, target selection, planning.

A scene fixture directory contains:
    rgb.png            scene image (unused by the math, kept for provenance)
    masks/<id>.png     one binary mask per labeled object
    labels.json        [{"id": ..., "label": ...}, ...]
    poses.json         candidate grasp poses (JSON array)
    intrinsics.json    {fx, fy, cx, cy}
    track.json         {"reference": {"u", "v"}, "updates": [...]} tracked point
    features/<id>.fvec global descriptor per object
    features/<id>.fmap dense descriptor map per object

Depth images are accepted alongside but unused: candidate poses are ingested,
not generated from point clouds.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cog_locator import ExternalChooser, select_cog
from .correspondence import FeatureMap, generate_candidates
from .errors import NoMatch, ParseError, PlanStageError
from .executor import GraspPlan
from .grasp_filter import (
    DEFAULT_ANISOTROPY_THRESHOLD,
    DEFAULT_PATCH_HALF_WIDTH,
    DEFAULT_RADIUS_PX,
    CameraIntrinsics,
    filter_poses,
    load_poses,
    project_point,
    rotation_correction,
)
from .executor import DEFAULT_EPSILON_PX, DEFAULT_MAX_REPLANS
from .memory_bank import DEFAULT_TOPK, FeatureVector, retrieve_topk
from .io_formats import read_fvec


@dataclass
class PlanConfig:
    k: int = DEFAULT_TOPK
    radius_px: float = DEFAULT_RADIUS_PX
    patch_half_width: int = DEFAULT_PATCH_HALF_WIDTH
    anisotropy_threshold: float = DEFAULT_ANISOTROPY_THRESHOLD
    epsilon_px: float = DEFAULT_EPSILON_PX
    max_replans: int = DEFAULT_MAX_REPLANS
    chooser_endpoint: str | None = None
    chooser_timeout: float = 10.0
    seed: int = 0

    @classmethod
    def load(cls, path, **overrides) -> "PlanConfig":
        data = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ParseError(f"{path}: {exc}") from exc
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class SceneObservation:
    root: Path
    objects: list  # [{"id": ..., "label": ...}]
    intrinsics: CameraIntrinsics
    track: dict

    def mask(self, obj_id: str) -> np.ndarray:
        from PIL import Image

        with Image.open(self.root / "masks" / f"{obj_id}.png") as im:
            return np.asarray(im.convert("L")) > 127

    def fvec(self, obj_id: str) -> FeatureVector:
        return FeatureVector.from_raw(read_fvec(self.root / "features" / f"{obj_id}.fvec"))

    def fmap(self, obj_id: str) -> FeatureMap:
        return FeatureMap.load(self.root / "features" / f"{obj_id}.fmap")

    @property
    def poses_path(self) -> Path:
        return self.root / "poses.json"


def load_scene(scene_dir) -> SceneObservation:
    root = Path(scene_dir)
    try:
        objects = json.loads((root / "labels.json").read_text())
        track = json.loads((root / "track.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{root}: {exc}") from exc
    if not objects:
        raise ParseError(f"{root}: labels.json lists no objects")
    return SceneObservation(
        root=root,
        objects=objects,
        intrinsics=CameraIntrinsics.load(root / "intrinsics.json"),
        track=track,
    )


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> set:
    return set(_TOKEN_RE.findall(text.lower()))


def select_target(scene: SceneObservation, instruction: str, chooser: ExternalChooser | None = None) -> str:
    """Object whose label shares the most tokens with the instruction.

    Ties break toward the lowest id. Zero overlap everywhere raises NoMatch
    unless an external chooser is configured to make the call.
    """
    if not instruction.strip():
        raise NoMatch("empty instruction")
    instr = _tokens(instruction)
    scored = sorted(
        ((len(_tokens(o["label"]) & instr), o["id"]) for o in scene.objects),
        key=lambda s: (-s[0], s[1]),
    )
    best_overlap, best_id = scored[0]
    if best_overlap > 0:
        return best_id
    if chooser is not None:
        from .correspondence import CandidatePoint

        fake = [CandidatePoint(point=(i, 0), confidence=0.0, provenance=o["id"]) for i, o in enumerate(scene.objects)]
        try:
            idx = chooser.choose(fake)
            return scene.objects[idx]["id"]
        except Exception as exc:  # noqa: BLE001
            raise NoMatch(f"no label overlaps instruction and external chooser failed: {exc}")
    raise NoMatch(f"no object label overlaps instruction {instruction!r}")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PlanStageError:
        raise
    except Exception as exc:
        raise PlanStageError(name, exc) from exc


def plan(scene: SceneObservation, instruction: str, bank, fmap_resolver, config: PlanConfig | None = None) -> GraspPlan:
    """Full planning pass: target -> CoG -> pose filter -> rotation fix.

    `fmap_resolver(entry)` returns the exemplar's dense FeatureMap (or a path
    to one). Deterministic given the scene files, bank, and config.
    """
    config = config or PlanConfig()
    chooser = None
    if config.chooser_endpoint:
        chooser = ExternalChooser(config.chooser_endpoint, timeout=config.chooser_timeout)

    target_id = _stage("select_target", select_target, scene, instruction, chooser)
    tgt_mask = _stage("load_target", scene.mask, target_id)
    tgt_fvec = _stage("load_target", scene.fvec, target_id)
    tgt_fmap = _stage("load_target", scene.fmap, target_id)

    ranked = _stage("retrieve_topk", retrieve_topk, bank, tgt_fvec, config.k)
    retrieved = [(entry, fmap_resolver(entry)) for entry, _ in ranked]
    candidates = _stage("generate_candidates", generate_candidates, tgt_fmap, tgt_mask, retrieved)
    cog = _stage("select_cog", select_cog, candidates, tgt_mask, chooser)

    poses = _stage("filter_poses", load_poses, scene.poses_path)
    selected = _stage(
        "filter_poses", filter_poses, poses, cog.point, tgt_mask, scene.intrinsics, config.radius_px
    )
    corrected_pose, corrected = _stage(
        "rotation_correction",
        rotation_correction,
        selected.pose,
        tgt_mask,
        selected.projected,
        scene.intrinsics,
        config.patch_half_width,
        config.anisotropy_threshold,
    )
    from dataclasses import replace

    selected = replace(selected, pose=corrected_pose, corrected=corrected)
    projection = project_point(scene.intrinsics, selected.pose.position)
    return GraspPlan(
        target_id=target_id, cog=cog, grasp=selected, planned_projection=projection
    )


def render_success_table(result) -> str:
    """Text table of per-category success rates.

    Rows are categories plus a pooled Total row (aggregate successes over
    aggregate trials, not a mean of row percentages); columns are policies.
    """
    headers = ["Tasks"] + list(result.policies)
    rows = []
    for category in result.categories:
        row = [category]
        for policy in result.policies:
            rate = result.rate(policy, category)
            row.append("n/a" if rate is None else f"{100 * rate:.0f}%")
        rows.append(row)
    total = ["Total"]
    for policy in result.policies:
        rate = result.rate(policy)
        total.append("n/a" if rate is None else f"{100 * rate:.0f}%")
    rows.append(total)

    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"
