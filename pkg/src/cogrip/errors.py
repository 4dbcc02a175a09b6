"""Exception hierarchy shared across the package."""


class CogripError(Exception):
    """Base class for all package-specific errors."""


class FormatError(CogripError):
    """A binary or JSON payload does not conform to its documented format."""


class ParseError(CogripError):
    """A manifest or config file could not be parsed."""


class DimensionMismatch(CogripError):
    """Feature dimensionality differs from what the container requires."""


class DuplicateId(CogripError):
    """An entry id is already present in the bank."""


class EmptyBank(CogripError):
    """Retrieval was attempted against a bank with no entries."""


class OutOfBounds(CogripError):
    """A point lies outside the valid coordinate range."""


class DepthMismatch(CogripError):
    """Two feature maps do not share a channel depth."""


class EmptyMask(CogripError):
    """A mask that must contain at least one true pixel is empty."""


class NoCandidates(CogripError):
    """Every candidate source failed; nothing to choose from."""


class NearParallel(CogripError):
    """Two plumb lines are too close to parallel to intersect reliably."""


class BehindCamera(CogripError):
    """A 3D point has non-positive depth and cannot be projected."""


class NoValidPose(CogripError):
    """Every candidate grasp pose was rejected by the mask/visibility filter."""


class DegeneratePatch(CogripError):
    """Too few in-mask pixels around the grasp point to estimate orientation."""


class MissingObservation(CogripError):
    """The current observation lacks the tracked reference projection."""


class IllegalTransition(CogripError):
    """The requested state-machine transition is not in the transition table."""


class GraspOffObject(CogripError):
    """The grasp point does not lie on any part of the object model."""


class NoMatch(CogripError):
    """No scene object label overlaps the instruction."""


class PlanStageError(CogripError):
    """Wraps a failure inside the planning pipeline with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
