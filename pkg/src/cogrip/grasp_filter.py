"""Grasp pose projection, CoG-proximity filtering, and rotation correction.

Pose convention: position in meters in the camera frame (z forward), rotation
as a unit quaternion (w, x, y, z). The gripper closes along the pose's local
y axis.

Selection rule for the score/distance trade-off: poses projecting inside the
target mask and within `radius_px` of the CoG compete on score; if none falls
inside that ball, the closest pose wins (score, then input index break ties).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import BehindCamera, DegeneratePatch, NoValidPose, OutOfBounds, ParseError

DEFAULT_RADIUS_PX = 20.0
DEFAULT_PATCH_HALF_WIDTH = 15
DEFAULT_ANISOTROPY_THRESHOLD = 1.5
QUAT_TOL = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    @classmethod
    def load(cls, path) -> "CameraIntrinsics":
        try:
            data = json.loads(Path(path).read_text())
            return cls(fx=data["fx"], fy=data["fy"], cx=data["cx"], cy=data["cy"])
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ParseError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class GraspPose:
    position: tuple[float, float, float]
    rotation: tuple[float, float, float, float]  # (w, x, y, z), unit norm
    width: float
    depth: float
    score: float

    def __post_init__(self):
        n = float(np.linalg.norm(self.rotation))
        if abs(n - 1.0) > QUAT_TOL:
            raise ValueError(f"quaternion norm {n} not within {QUAT_TOL} of 1")
        if self.width < 0 or self.depth < 0:
            raise ValueError("width and depth must be >= 0")

    @property
    def closing_axis(self) -> np.ndarray:
        """Unit closing direction in the camera frame (local y axis)."""
        return quat_to_matrix(self.rotation)[:, 1]


@dataclass(frozen=True)
class SelectedGrasp:
    pose: GraspPose
    projected: tuple[float, float]
    cog_distance: float
    corrected: bool = False


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_multiply(a, b) -> tuple[float, float, float, float]:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_about_z(angle: float) -> tuple[float, float, float, float]:
    half = angle / 2.0
    return (float(np.cos(half)), 0.0, 0.0, float(np.sin(half)))


def load_poses(path) -> list[GraspPose]:
    """Read a candidate-pose JSON file (array of pose records)."""
    try:
        records = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(records, list):
        raise ParseError(f"{path}: pose file must be a JSON array")
    poses = []
    for rec in records:
        poses.append(
            GraspPose(
                position=tuple(float(c) for c in rec["position"]),
                rotation=tuple(float(c) for c in rec["rotation"]),
                width=float(rec["width"]),
                depth=float(rec["depth"]),
                score=float(rec["score"]),
            )
        )
    return poses


def project_point(cam: CameraIntrinsics, p) -> tuple[float, float]:
    """Pinhole projection of a camera-frame point to pixel (u, v)."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    if z <= 0.0:
        raise BehindCamera(f"point has non-positive depth z = {z}")
    return (cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy)


def project_direction(cam: CameraIntrinsics, p, axis) -> np.ndarray:
    """Image-plane direction of a 3D direction at point p (unit 2-vector).

    Exact directional derivative of the pinhole projection, i.e. the Jacobian
    at p applied to the axis.
    """
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    if z <= 0.0:
        raise BehindCamera(f"point has non-positive depth z = {z}")
    ax, ay, az = float(axis[0]), float(axis[1]), float(axis[2])
    du = cam.fx * (ax / z - x * az / (z * z))
    dv = cam.fy * (ay / z - y * az / (z * z))
    n = float(np.hypot(du, dv))
    if n == 0.0:
        raise DegeneratePatch("closing axis projects to a zero-length image direction")
    return np.array([du / n, dv / n])


def _pixel_in_mask(mask: np.ndarray, uv) -> bool:
    u, v = int(round(uv[0])), int(round(uv[1]))
    h, w = mask.shape
    return 0 <= u < w and 0 <= v < h and bool(mask[v, u])


def filter_poses(poses, cog_pixel, tgt_mask, cam: CameraIntrinsics, radius_px: float = DEFAULT_RADIUS_PX) -> SelectedGrasp:
    """Pick the pose nearest the CoG, with score tie-breaking inside the ball.

    (1) drop poses behind the camera or projecting outside the mask;
    (2) among survivors within `radius_px` of the CoG pixel, pick max score;
    (3) otherwise pick minimum distance, ties by max score, then input index.
    """
    if not poses:
        raise NoValidPose("no candidate poses supplied")
    if radius_px <= 0:
        raise ValueError("radius_px must be positive")
    mask = np.asarray(tgt_mask, dtype=bool)

    survivors = []  # (index, pose, projected, distance)
    for i, pose in enumerate(poses):
        try:
            uv = project_point(cam, pose.position)
        except BehindCamera:
            continue
        if not _pixel_in_mask(mask, uv):
            continue
        dist = float(np.hypot(uv[0] - cog_pixel[0], uv[1] - cog_pixel[1]))
        survivors.append((i, pose, uv, dist))
    if not survivors:
        raise NoValidPose("every pose was dropped by the mask/visibility filter")

    in_ball = [s for s in survivors if s[3] <= radius_px]
    if in_ball:
        best = max(in_ball, key=lambda s: (s[1].score, -s[0]))
    else:
        best = min(survivors, key=lambda s: (s[3], -s[1].score, s[0]))
    return SelectedGrasp(pose=best[1], projected=best[2], cog_distance=best[3])


def patch_principal_axes(tgt_mask, grasp_pixel, patch_half_width: int):
    """Eigen-decomposition of the in-mask pixel covariance around a point.

    Returns (ratio, minor_axis) where minor_axis is the unit eigenvector of
    the smaller eigenvalue (perpendicular to the local elongation).
    """
    mask = np.asarray(tgt_mask, dtype=bool)
    h, w = mask.shape
    u0, v0 = int(round(grasp_pixel[0])), int(round(grasp_pixel[1]))
    us = np.arange(max(0, u0 - patch_half_width), min(w, u0 + patch_half_width + 1))
    vs = np.arange(max(0, v0 - patch_half_width), min(h, v0 + patch_half_width + 1))
    sub = mask[np.ix_(vs, us)]
    vv, uu = np.nonzero(sub)
    if uu.size < 3:
        raise DegeneratePatch(f"only {uu.size} in-mask pixels in the patch")
    pts = np.stack([us[uu], vs[vv]], axis=1).astype(np.float64)
    cov = np.cov(pts.T)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    lam_min, lam_max = float(eigvals[0]), float(eigvals[1])
    ratio = np.inf if lam_min <= 1e-12 else lam_max / lam_min
    return ratio, eigvecs[:, 0]


def rotation_correction(
    pose: GraspPose,
    tgt_mask,
    grasp_pixel,
    cam: CameraIntrinsics,
    patch_half_width: int = DEFAULT_PATCH_HALF_WIDTH,
    anisotropy_threshold: float = DEFAULT_ANISOTROPY_THRESHOLD,
) -> tuple[GraspPose, bool]:
    """Align the closing axis's image projection with the local minor axis.

    The local mask patch around the grasp pixel is analyzed via its pixel
    covariance. Isotropic patches (eigenvalue ratio below the threshold) leave
    the pose unchanged. Otherwise the pose is rotated about the camera optical
    axis until the closing axis projects along the minor principal axis, i.e.
    across the elongated structure. Returns (pose, corrected).
    """
    ratio, minor = patch_principal_axes(tgt_mask, grasp_pixel, patch_half_width)
    if ratio < anisotropy_threshold:
        return pose, False

    q = pose.rotation
    target_angle = float(np.arctan2(minor[1], minor[0]))
    # The projection Jacobian makes image angle a nonlinear function of the
    # in-plane rotation; a few fixed-point steps converge far below 1e-12 rad.
    for _ in range(50):
        axis = quat_to_matrix(q)[:, 1]
        d = project_direction(cam, pose.position, axis)
        theta = target_angle - float(np.arctan2(d[1], d[0]))
        while theta > np.pi / 2:
            theta -= np.pi
        while theta <= -np.pi / 2:
            theta += np.pi
        if abs(theta) < 1e-13:
            break
        q = quat_multiply(quat_about_z(theta), q)
        q = tuple(float(c) for c in np.asarray(q) / np.linalg.norm(q))
    return replace(pose, rotation=q), True
