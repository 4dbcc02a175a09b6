"""Closed-loop execution state machine.

A plan is only executed after a verification step: the grasp's planned image
projection must still match the scene's current tracked reference projection.
A mismatch triggers a replan (back to localization) up to `max_replans`
times, after which the run fails.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .cog_locator import CoGEstimate
from .errors import IllegalTransition, MissingObservation
from .grasp_filter import CameraIntrinsics, SelectedGrasp, project_point

DEFAULT_EPSILON_PX = 5.0
DEFAULT_MAX_REPLANS = 3


class Stage(enum.Enum):
    LOCALIZE = "Localize"
    LOCATE_COG = "LocateCoG"
    GENERATE_POSES = "GeneratePoses"
    FILTER = "Filter"
    VERIFY = "Verify"
    EXECUTE = "Execute"
    REPLAN = "Replan"
    FAILED = "Failed"


class Event(enum.Enum):
    ADVANCE = "advance"            # the current stage finished its work
    DECIDE_EXECUTE = "execute"     # verification passed
    DECIDE_REPLAN = "replan"       # verification failed


class Decision(enum.Enum):
    EXECUTE = "Execute"
    REPLAN = "Replan"


@dataclass(frozen=True)
class GraspPlan:
    """A fully resolved grasp decision for one target object."""

    target_id: str
    cog: CoGEstimate
    grasp: SelectedGrasp
    planned_projection: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "target_id": self.target_id,
            "cog": {
                "point": list(self.cog.point),
                "chooser": self.cog.chooser.value,
                "fallback_reason": self.cog.fallback_reason,
                "candidates": [
                    {
                        "point": list(c.point),
                        "confidence": c.confidence,
                        "provenance": c.provenance,
                    }
                    for c in self.cog.chosen_from
                ],
            },
            "grasp": {
                "position": list(self.grasp.pose.position),
                "rotation": list(self.grasp.pose.rotation),
                "width": self.grasp.pose.width,
                "depth": self.grasp.pose.depth,
                "score": self.grasp.pose.score,
                "projected": list(self.grasp.projected),
                "cog_distance": self.grasp.cog_distance,
                "corrected": self.grasp.corrected,
            },
            "planned_projection": list(self.planned_projection),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class PlanState:
    stage: Stage = Stage.LOCALIZE
    replan_count: int = 0
    max_replans: int = DEFAULT_MAX_REPLANS
    plan: GraspPlan | None = None


# stage -> {event -> next stage}; Verify is handled specially (exhaustion).
_TRANSITIONS = {
    Stage.LOCALIZE: {Event.ADVANCE: Stage.LOCATE_COG},
    Stage.LOCATE_COG: {Event.ADVANCE: Stage.GENERATE_POSES},
    Stage.GENERATE_POSES: {Event.ADVANCE: Stage.FILTER},
    Stage.FILTER: {Event.ADVANCE: Stage.VERIFY},
    Stage.VERIFY: {Event.DECIDE_EXECUTE: Stage.EXECUTE, Event.DECIDE_REPLAN: Stage.REPLAN},
    Stage.REPLAN: {Event.ADVANCE: Stage.LOCALIZE},
}


def step(state: PlanState, event: Event) -> PlanState:
    """Apply one transition. Execute and Failed are terminal."""
    table = _TRANSITIONS.get(state.stage)
    if table is None or event not in table:
        raise IllegalTransition(f"event {event.value!r} not legal in stage {state.stage.value}")
    nxt = table[event]
    if nxt is Stage.REPLAN and state.replan_count >= state.max_replans:
        return replace(state, stage=Stage.FAILED)
    if state.stage is Stage.REPLAN and nxt is Stage.LOCALIZE:
        return replace(state, stage=nxt, replan_count=state.replan_count + 1)
    return replace(state, stage=nxt)


def current_projection(observation, cam: CameraIntrinsics | None = None) -> tuple[float, float]:
    """Extract the tracked reference projection from an observation.

    Accepts {"u":..,"v":..} directly, or {"point_3d":[x,y,z]} which is
    projected through the camera.
    """
    if observation is None:
        raise MissingObservation("no current observation supplied")
    if isinstance(observation, dict):
        if "u" in observation and "v" in observation:
            return (float(observation["u"]), float(observation["v"]))
        if "point_3d" in observation:
            if cam is None:
                raise MissingObservation("3D observation given but no intrinsics")
            return project_point(cam, observation["point_3d"])
        raise MissingObservation(f"observation lacks a reference projection: {observation}")
    return (float(observation[0]), float(observation[1]))


def verify(plan: GraspPlan, observation, cam: CameraIntrinsics | None = None, epsilon_px: float = DEFAULT_EPSILON_PX):
    """Compare the planned projection against the current one.

    Returns (decision, distance_px). The comparison is inclusive: a
    displacement of exactly epsilon still executes.
    """
    cur = current_projection(observation, cam)
    dist = float(np.hypot(cur[0] - plan.planned_projection[0], cur[1] - plan.planned_projection[1]))
    return (Decision.EXECUTE if dist <= epsilon_px else Decision.REPLAN), dist


@dataclass
class TraceRecord:
    frm: str
    to: str
    replan_count: int
    decision_distance_px: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "from": self.frm,
                "to": self.to,
                "replan_count": self.replan_count,
                "decision_distance_px": self.decision_distance_px,
            },
            sort_keys=True,
        )


def run_closed_loop(
    planner,
    observations,
    cam: CameraIntrinsics | None = None,
    epsilon_px: float = DEFAULT_EPSILON_PX,
    max_replans: int = DEFAULT_MAX_REPLANS,
):
    """Drive the state machine until Execute or Failed.

    `planner(cycle_index)` produces a GraspPlan for each planning cycle.
    `observations` yields the current tracked reference at each verification;
    the last observation repeats if the sequence runs out. Returns
    (final PlanState, trace list).
    """
    obs = list(observations)
    if not obs:
        raise MissingObservation("no observations supplied")
    state = PlanState(max_replans=max_replans)
    trace: list[TraceRecord] = []
    cycle = 0
    while state.stage not in (Stage.EXECUTE, Stage.FAILED):
        if state.stage is Stage.LOCALIZE:
            plan = planner(cycle)
            cycle += 1
            for _ in range(4):  # Localize -> LocateCoG -> GeneratePoses -> Filter -> Verify
                prev = state.stage
                state = step(state, Event.ADVANCE)
                trace.append(TraceRecord(prev.value, state.stage.value, state.replan_count))
            state = replace(state, plan=plan)
        current = obs[min(cycle - 1, len(obs) - 1)]
        decision, dist = verify(state.plan, current, cam, epsilon_px)
        event = Event.DECIDE_EXECUTE if decision is Decision.EXECUTE else Event.DECIDE_REPLAN
        prev = state.stage
        state = step(state, event)
        trace.append(TraceRecord(prev.value, state.stage.value, state.replan_count, dist))
        if state.stage is Stage.REPLAN:
            prev = state.stage
            state = step(state, Event.ADVANCE)
            trace.append(TraceRecord(prev.value, state.stage.value, state.replan_count))
    return state, trace
