"""Batch image feature exporter producing FVEC/FMAP files."""

from .backends import BACKENDS, HandcraftedBackend, make_backend
from .errors import BackendUnavailable, ExportError, UnreadableImage
from .export import ExportJob, export_features

__all__ = [
    "BACKENDS",
    "BackendUnavailable",
    "ExportError",
    "ExportJob",
    "HandcraftedBackend",
    "UnreadableImage",
    "export_features",
    "make_backend",
]

__version__ = "0.1.0"
