"""CoG-aware grasp planning: exemplar retrieval, semantic correspondence,
pose filtering, closed-loop execution, and a rigid-body stability benchmark."""

from .cog_locator import ChooserKind, CoGEstimate, ExternalChooser, select_cog
from .correspondence import CandidatePoint, FeatureMap, generate_candidates, map_point, sample_feature
from .estimator import CoGLocalizer
from .executor import Decision, GraspPlan, PlanState, Stage, run_closed_loop, step, verify
from .grasp_filter import (
    CameraIntrinsics,
    GraspPose,
    SelectedGrasp,
    filter_poses,
    project_point,
    rotation_correction,
)
from .memory_bank import FeatureVector, MemoryBank, MemoryEntry, add_entry, retrieve_topk
from .stability_sim import (
    GraspOutcome,
    GripperParams,
    OutcomeKind,
    RectPart,
    RigidObjectModel,
    grasp_outcome,
    run_benchmark,
    true_cog,
)

__version__ = "0.1.0"
