"""Scikit-learn style facade over the retrieval + correspondence stack.

`CoGLocalizer` fits on CoG-annotated exemplars and predicts CoG pixels for
target scenes, so the core algorithm composes with sklearn pipelines and
parameter search (`get_params` / `set_params` come from BaseEstimator).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .cog_locator import ExternalChooser, select_cog
from .correspondence import FeatureMap, generate_candidates
from .memory_bank import (
    CogSource,
    FeatureVector,
    MemoryBank,
    MemoryEntry,
    add_entry,
    retrieve_topk,
)
from .validation import check_feature_matrix, check_mask, check_point


class CoGLocalizer(BaseEstimator):
    """Predict a target object's CoG pixel from annotated exemplars.

    Parameters
    ----------
    k : number of exemplars retrieved per query (cosine top-k).
    chooser_endpoint : optional external chooser (URL or command); the
        geometric-medoid default is used when unset or on failure.
    chooser_timeout : seconds before an external call falls back.
    """

    def __init__(self, k: int = 3, chooser_endpoint: str | None = None, chooser_timeout: float = 10.0):
        self.k = k
        self.chooser_endpoint = chooser_endpoint
        self.chooser_timeout = chooser_timeout

    def fit(self, X, y, feature_maps=None, categories=None):
        """Store exemplars.

        X : (n, D) global descriptors, one row per exemplar.
        y : (n, 2) annotated CoG pixels (u, v) in each exemplar image.
        feature_maps : length-n list of dense maps (FeatureMap or H x W x D
            arrays) used for correspondence at predict time.
        """
        X = check_feature_matrix(X)
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (X.shape[0], 2):
            raise ValueError(f"y must be (n, 2) CoG pixels, got {y.shape}")
        if feature_maps is None or len(feature_maps) != X.shape[0]:
            raise ValueError("feature_maps must supply one dense map per exemplar")

        bank = MemoryBank()
        fmaps = {}
        for i in range(X.shape[0]):
            fmap = feature_maps[i]
            if not isinstance(fmap, FeatureMap):
                fmap = FeatureMap(data=np.asarray(fmap, dtype=np.float32))
            cog = check_point(y[i], width=fmap.width, height=fmap.height)
            entry = MemoryEntry(
                id=f"exemplar-{i}",
                category=str(categories[i]) if categories is not None else "",
                image_path="",
                featmap_path="",
                fvec=FeatureVector.from_raw(X[i]),
                cog=cog,
                source=CogSource.SUSPENSION,
            )
            bank = add_entry(bank, entry)
            fmaps[entry.id] = fmap
        self.bank_ = bank
        self.feature_maps_ = fmaps
        self.n_features_in_ = X.shape[1]
        return self

    def _chooser(self):
        if self.chooser_endpoint:
            return ExternalChooser(self.chooser_endpoint, timeout=self.chooser_timeout)
        return None

    def predict(self, scenes):
        """CoG pixel per scene; each scene is (fvec, fmap, mask) or a dict."""
        check_is_fitted(self, "bank_")
        out = []
        for scene in scenes:
            if isinstance(scene, dict):
                fvec, fmap, mask = scene["fvec"], scene["fmap"], scene.get("mask")
            else:
                fvec, fmap, mask = scene
            if not isinstance(fmap, FeatureMap):
                fmap = FeatureMap(data=np.asarray(fmap, dtype=np.float32))
            if mask is not None:
                mask = check_mask(mask, shape=(fmap.height, fmap.width))
            query = FeatureVector.from_raw(np.asarray(fvec, dtype=np.float64))
            ranked = retrieve_topk(self.bank_, query, self.k)
            retrieved = [(entry, self.feature_maps_[entry.id]) for entry, _ in ranked]
            candidates = generate_candidates(fmap, mask, retrieved)
            est = select_cog(candidates, mask, self._chooser())
            out.append(est.point)
        return np.array(out, dtype=np.float64)
