"""Feature extraction backends.

A backend turns an RGB image array into a dense per-pixel descriptor map
(H x W x D float32) and a global descriptor (D float32). Which backend and
which settings were used is always recorded in the export's metadata sidecar,
never baked into the files.

The `handcrafted` backend has no model dependencies and is fully
deterministic, which makes it the default for tests and offline use. The
model-based backends declare themselves unavailable unless their runtimes
are installed.
"""

from __future__ import annotations

import numpy as np

from .errors import BackendUnavailable


class HandcraftedBackend:
    """Classical dense descriptors: color, gradients, position, bias.

    Settings:
        grad_scale: weight on the Sobel gradient channels (default 1.0)
        position_scale: weight on the normalized-coordinate channels (default 1.0)
    """

    name = "handcrafted"
    dimension = 8

    def __init__(self, settings=None):
        settings = dict(settings or {})
        self.grad_scale = float(settings.pop("grad_scale", 1.0))
        self.position_scale = float(settings.pop("position_scale", 1.0))
        if settings:
            raise ValueError(f"unknown handcrafted settings: {sorted(settings)}")

    @property
    def settings(self) -> dict:
        return {"grad_scale": self.grad_scale, "position_scale": self.position_scale}

    def extract(self, rgb: np.ndarray):
        """Return (dense H x W x 8, global 8) float32 features."""
        rgb = np.asarray(rgb, dtype=np.float32)
        if rgb.ndim == 2:
            rgb = np.repeat(rgb[:, :, None], 3, axis=2)
        rgb = rgb[:, :, :3] / 255.0
        h, w, _ = rgb.shape

        gray = rgb @ np.array([0.299, 0.587, 0.114], dtype=np.float32)
        padded = np.pad(gray, 1, mode="edge")
        gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
        gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0

        vs, us = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        nu = us / max(w - 1, 1) - 0.5
        nv = vs / max(h - 1, 1) - 0.5

        dense = np.stack(
            [
                rgb[:, :, 0],
                rgb[:, :, 1],
                rgb[:, :, 2],
                self.grad_scale * gx,
                self.grad_scale * gy,
                self.position_scale * nu,
                self.position_scale * nv,
                np.ones_like(gray),  # bias keeps every pixel's norm positive
            ],
            axis=-1,
        ).astype(np.float32)
        return dense, dense.reshape(-1, self.dimension).mean(axis=0)


class _ModelBackend:
    """Placeholder for encoder backends that need a deep-learning runtime."""

    runtime = "torch"

    def __init__(self, settings=None):
        try:
            __import__(self.runtime)
        except ImportError as exc:
            raise BackendUnavailable(
                f"backend {self.name!r} requires {self.runtime}, which is not installed"
            ) from exc
        raise BackendUnavailable(
            f"backend {self.name!r} has no bundled model weights; use 'handcrafted' "
            f"or point a custom backend at local weights"
        )


class ClipBackend(_ModelBackend):
    name = "clip"


class DiftBackend(_ModelBackend):
    name = "dift"


BACKENDS = {
    HandcraftedBackend.name: HandcraftedBackend,
    ClipBackend.name: ClipBackend,
    DiftBackend.name: DiftBackend,
}


def make_backend(name: str, settings=None):
    try:
        cls = BACKENDS[name]
    except KeyError:
        raise BackendUnavailable(
            f"unknown backend {name!r}; available: {sorted(BACKENDS)}"
        ) from None
    return cls(settings)
