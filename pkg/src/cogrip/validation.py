"""Input validation helpers shared by the estimator facade."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch


def check_feature_matrix(X) -> np.ndarray:
    """Coerce to a 2D float array of row descriptors; reject empties/NaNs."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"expected a nonempty 2D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def check_mask(mask, shape=None) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise DimensionMismatch(f"mask must be 2D, got shape {mask.shape}")
    if shape is not None and mask.shape != tuple(shape):
        raise DimensionMismatch(f"mask shape {mask.shape} != expected {tuple(shape)}")
    return mask


def check_point(point, width=None, height=None) -> tuple[float, float]:
    u, v = float(point[0]), float(point[1])
    if width is not None and not (0 <= u <= width - 1):
        raise ValueError(f"u = {u} outside [0, {width - 1}]")
    if height is not None and not (0 <= v <= height - 1):
        raise ValueError(f"v = {v} outside [0, {height - 1}]")
    return (u, v)
