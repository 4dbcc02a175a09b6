"""Select the final CoG point from the candidate set.

The built-in chooser picks the geometric medoid of the candidates (the
candidate minimizing the summed pixel distance to the others), which is robust
to a single bad correspondence. An external chooser can be configured to make
the call over a simple JSON protocol (HTTP POST or subprocess stdin/stdout);
any transport failure or invalid reply falls back to the medoid.
"""

from __future__ import annotations

import enum
import json
import subprocess
import urllib.request
from dataclasses import dataclass, field

import numpy as np

from .correspondence import CandidatePoint
from .errors import NoCandidates


class ChooserKind(enum.Enum):
    DEFAULT_HEURISTIC = "DefaultHeuristic"
    EXTERNAL_SERVICE = "ExternalService"


@dataclass(frozen=True)
class CoGEstimate:
    point: tuple[int, int]  # (u, v) — always one of the candidates
    chosen_from: tuple[CandidatePoint, ...]
    chooser: ChooserKind
    fallback_reason: str | None = None


def build_request(candidates, image_path: str = "", mask_path: str = "") -> dict:
    return {
        "image_path": image_path,
        "mask_path": mask_path,
        "candidates": [
            {"index": i, "u": c.point[0], "v": c.point[1], "confidence": c.confidence}
            for i, c in enumerate(candidates)
        ],
    }


def medoid_index(candidates) -> int:
    """Index of the candidate minimizing the sum of distances to the others.

    Ties: higher confidence wins, then lower retrieval rank.
    """
    pts = np.array([c.point for c in candidates], dtype=np.float64)
    diffs = pts[:, None, :] - pts[None, :, :]
    sums = np.linalg.norm(diffs, axis=2).sum(axis=1)
    best = 0
    for i in range(1, len(candidates)):
        if sums[i] < sums[best] or (
            sums[i] == sums[best] and candidates[i].confidence > candidates[best].confidence
        ):
            best = i
    return best


class ExternalChooser:
    """Delegates the choice to a local HTTP endpoint or a subprocess.

    `endpoint` is either an http(s) URL (request POSTed as JSON) or a shell
    command (request written to stdin, reply read from stdout). The reply must
    be a JSON object {"selected": <index>}.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, image_path: str = "", mask_path: str = ""):
        self.endpoint = endpoint
        self.timeout = timeout
        self.image_path = image_path
        self.mask_path = mask_path

    def choose(self, candidates) -> int:
        payload = json.dumps(build_request(candidates, self.image_path, self.mask_path)).encode()
        if self.endpoint.startswith(("http://", "https://")):
            req = urllib.request.Request(
                self.endpoint, data=payload, headers={"Content-Type": "application/json"}
            )
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                reply = json.loads(resp.read())
        else:
            proc = subprocess.run(
                self.endpoint,
                shell=True,
                input=payload,
                capture_output=True,
                timeout=self.timeout,
                check=True,
            )
            reply = json.loads(proc.stdout)
        index = reply["selected"]
        if not isinstance(index, int) or not (0 <= index < len(candidates)):
            raise ValueError(f"chooser returned invalid index {index!r}")
        return index


def select_cog(candidates, tgt_mask=None, chooser: ExternalChooser | None = None) -> CoGEstimate:
    """Pick one candidate as the CoG estimate.

    With no external chooser the geometric medoid is used. External failures
    (transport errors, bad index) degrade to the medoid and record why, so a
    nonempty candidate list always yields an estimate.
    """
    candidates = tuple(candidates)
    if not candidates:
        raise NoCandidates("cannot select a CoG from zero candidates")
    if chooser is not None:
        try:
            idx = chooser.choose(candidates)
            return CoGEstimate(
                point=candidates[idx].point,
                chosen_from=candidates,
                chooser=ChooserKind.EXTERNAL_SERVICE,
            )
        except Exception as exc:  # noqa: BLE001 - degrade to the default chooser
            reason = f"{type(exc).__name__}: {exc}"
            idx = medoid_index(candidates)
            return CoGEstimate(
                point=candidates[idx].point,
                chosen_from=candidates,
                chooser=ChooserKind.DEFAULT_HEURISTIC,
                fallback_reason=reason,
            )
    idx = medoid_index(candidates)
    return CoGEstimate(
        point=candidates[idx].point,
        chosen_from=candidates,
        chooser=ChooserKind.DEFAULT_HEURISTIC,
    )
