"""Exporter error types."""


class ExportError(Exception):
    """Base class for exporter failures."""


class BackendUnavailable(ExportError):
    """The requested feature backend (or its runtime) is not installed."""


class UnreadableImage(ExportError):
    """An input image could not be opened or decoded."""
