"""Desk-scale rigid-body stability oracle.

Objects are planar composites of rotated rectangles with per-part mass.
A parallel-jaw lift is adjudicated with a scalar model: the gripper must
supply the object's weight through friction (2 * mu * F) and resist the
gravitational torque m * g * |x_cog - x_grasp| about the grip axis (gravity
acts along -y of the object frame during the lift).

Capacity boundaries are inclusive: exact equality counts as success.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import GraspOffObject

GRAVITY = 9.81


@dataclass(frozen=True)
class RectPart:
    """Rotated rectangle in the object frame (meters) with a point mass budget."""

    center: tuple[float, float]
    half_extents: tuple[float, float]
    angle: float  # radians, CCW
    mass: float

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("part mass must be > 0")
        if min(self.half_extents) <= 0:
            raise ValueError("half extents must be > 0")

    @property
    def area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]

    def contains(self, point, tol: float = 1e-12) -> bool:
        dx = point[0] - self.center[0]
        dy = point[1] - self.center[1]
        c, s = np.cos(-self.angle), np.sin(-self.angle)
        lx = c * dx - s * dy
        ly = s * dx + c * dy
        return abs(lx) <= self.half_extents[0] + tol and abs(ly) <= self.half_extents[1] + tol

    def contains_many(self, xs, ys) -> np.ndarray:
        dx = np.asarray(xs) - self.center[0]
        dy = np.asarray(ys) - self.center[1]
        c, s = np.cos(-self.angle), np.sin(-self.angle)
        lx = c * dx - s * dy
        ly = s * dx + c * dy
        return (np.abs(lx) <= self.half_extents[0]) & (np.abs(ly) <= self.half_extents[1])


@dataclass(frozen=True)
class RigidObjectModel:
    parts: tuple[RectPart, ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("model needs at least one part")

    @property
    def total_mass(self) -> float:
        return sum(p.mass for p in self.parts)

    def contains(self, point) -> bool:
        return any(p.contains(point) for p in self.parts)

    def contains_many(self, xs, ys) -> np.ndarray:
        inside = np.zeros(np.shape(xs), dtype=bool)
        for p in self.parts:
            inside |= p.contains_many(xs, ys)
        return inside

    def bounding_box(self):
        """Axis-aligned (xmin, ymin, xmax, ymax) over all part corners."""
        xs, ys = [], []
        for p in self.parts:
            hx, hy = p.half_extents
            c, s = np.cos(p.angle), np.sin(p.angle)
            for sx in (-1, 1):
                for sy in (-1, 1):
                    xs.append(p.center[0] + c * sx * hx - s * sy * hy)
                    ys.append(p.center[1] + s * sx * hx + c * sy * hy)
        return min(xs), min(ys), max(xs), max(ys)

    def to_dict(self) -> dict:
        return {
            "parts": [
                {
                    "center": list(p.center),
                    "half_extents": list(p.half_extents),
                    "angle": p.angle,
                    "mass": p.mass,
                }
                for p in self.parts
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RigidObjectModel":
        return cls(
            parts=tuple(
                RectPart(
                    center=tuple(p["center"]),
                    half_extents=tuple(p["half_extents"]),
                    angle=float(p.get("angle", 0.0)),
                    mass=float(p["mass"]),
                )
                for p in data["parts"]
            )
        )


@dataclass(frozen=True)
class GripperParams:
    max_normal_force: float = 40.0  # N
    friction: float = 0.6
    torque_capacity: float = 1.2  # N*m
    gravity: float = GRAVITY

    def __post_init__(self):
        if min(self.max_normal_force, self.friction, self.torque_capacity) <= 0:
            raise ValueError("gripper parameters must be > 0")


class OutcomeKind(enum.Enum):
    LIFTED = "Lifted"
    SLIP_ROTATION = "SlipRotation"
    TOO_HEAVY = "TooHeavy"


@dataclass(frozen=True)
class GraspOutcome:
    kind: OutcomeKind
    required_torque: float
    required_force: float

    @property
    def success(self) -> bool:
        return self.kind is OutcomeKind.LIFTED


def true_cog(model: RigidObjectModel) -> tuple[float, float]:
    """Mass-weighted average of part centroids."""
    m = model.total_mass
    x = sum(p.mass * p.center[0] for p in model.parts) / m
    y = sum(p.mass * p.center[1] for p in model.parts) / m
    return (x, y)


def grasp_outcome(model: RigidObjectModel, grasp_point, gripper: GripperParams) -> GraspOutcome:
    """Adjudicate a parallel-jaw lift at `grasp_point` (object frame, meters)."""
    if not model.contains(grasp_point):
        raise GraspOffObject(f"grasp point {tuple(grasp_point)} is not on the object")
    m = model.total_mass
    required_force = m * gripper.gravity
    cog = true_cog(model)
    required_torque = m * gripper.gravity * abs(cog[0] - float(grasp_point[0]))
    if required_force > 2.0 * gripper.friction * gripper.max_normal_force:
        return GraspOutcome(OutcomeKind.TOO_HEAVY, required_torque, required_force)
    if required_torque > gripper.torque_capacity:
        return GraspOutcome(OutcomeKind.SLIP_ROTATION, required_torque, required_force)
    return GraspOutcome(OutcomeKind.LIFTED, required_torque, required_force)


@dataclass
class BenchmarkResult:
    """Per-policy, per-category trial tallies."""

    policies: list[str]
    categories: list[str]
    # (policy, category) -> [trials, successes]
    cells: dict = field(default_factory=dict)

    def record(self, policy: str, category: str, success: bool) -> None:
        cell = self.cells.setdefault((policy, category), [0, 0])
        cell[0] += 1
        cell[1] += int(success)

    def rate(self, policy: str, category: str | None = None):
        if category is None:
            trials = sum(self.cells.get((policy, c), [0, 0])[0] for c in self.categories)
            wins = sum(self.cells.get((policy, c), [0, 0])[1] for c in self.categories)
        else:
            trials, wins = self.cells.get((policy, category), [0, 0])
        return None if trials == 0 else wins / trials

    def to_csv(self) -> str:
        lines = ["policy,category,trials,successes,rate"]
        for policy in self.policies:
            for category in self.categories:
                trials, wins = self.cells.get((policy, category), [0, 0])
                rate = "n/a" if trials == 0 else f"{wins / trials:.4f}"
                lines.append(f"{policy},{category},{trials},{wins},{rate}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        from .pipeline import render_success_table

        return render_success_table(self)


def run_benchmark(policies=None, trials: int = 100, seed: int = 0, gripper: GripperParams | None = None, categories=None) -> BenchmarkResult:
    """Adjudicate each policy's grasp point on a shared synthetic tool family.

    Trial t uses category t mod len(categories); every policy sees the same
    fixture in a trial. Each trial draws its RNG stream from (seed, t) so runs
    are reproducible and order-independent across policies.
    """
    from . import synthetic

    if trials < 1:
        raise ValueError("trials must be >= 1")
    if policies is None:
        policies = synthetic.default_policies()
    gripper = gripper or GripperParams()
    categories = list(categories or synthetic.TOOL_CATEGORIES)

    bank_ctx = synthetic.build_synthetic_bank(seed=seed)
    result = BenchmarkResult(policies=list(policies), categories=categories)
    for t in range(trials):
        category = categories[t % len(categories)]
        fixture = synthetic.make_fixture(category, np.random.default_rng([seed, t]))
        for p_idx, (name, policy) in enumerate(policies.items()):
            ctx = synthetic.PolicyContext(
                bank=bank_ctx, rng=np.random.default_rng([seed, t, p_idx])
            )
            point = policy(fixture, ctx)
            point = fixture.clamp_to_object(point)
            outcome = grasp_outcome(fixture.model, point, gripper)
            result.record(name, category, outcome.success)
    return result
